"""Discrete free-boundary disks in the unit 4-ball.

The energy of a triangulated disk is its area plus a quadratic penalty on
the symplectic form over each triangle, optionally plus a contact-angle
penalty at the boundary.  Boundary vertices live on the unit sphere.  From a
small perturbation of the equatorial disk the descent should return to a
flat Lagrangian disk through the origin.

Stabilisation (all switchable in :class:`SolverConfig`):

* the mesh is kept odd, ``X(-z) = -X(z)``, which removes translations;
* interior vertices move only normally to the surface, boundary vertices
  only normally to the boundary curve within the sphere, so that the
  polygonal parametrisation cannot collapse along itself.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .ambient import j_apply, omega
from .charts import Chart, Jet
from .curvature import cubic_A
from .examples import ExampleSpec, perturb, plane_disk
from .hopf import polar_combination, polar_components_from_cartesian

BOUNDARY_TOL = 1e-12


class MeshError(ValueError):
    """Invalid mesh sizes or initial data."""


class TopologyError(ValueError):
    """Only disk-type meshes are supported."""


@dataclass
class DiskMesh:
    """Polar triangulated disk: a centre vertex plus ``nr`` rings of ``nphi`` vertices."""

    nr: int
    nphi: int
    positions: np.ndarray  # (V, 4)
    triangles: np.ndarray  # (F, 3)
    params: np.ndarray  # (V, 2) polar parameters (r, angle)

    @property
    def n_vertices(self) -> int:
        return 1 + self.nr * self.nphi

    def index(self, ring: int, sector) -> np.ndarray:
        return 1 + (ring - 1) * self.nphi + np.mod(sector, self.nphi)

    @property
    def boundary(self) -> np.ndarray:
        return self.index(self.nr, np.arange(self.nphi))

    @property
    def interior(self) -> np.ndarray:
        return np.arange(1, 1 + (self.nr - 1) * self.nphi)

    @property
    def antipode(self) -> np.ndarray:
        idx = np.arange(self.n_vertices)
        ring = (idx - 1) // self.nphi + 1
        sector = (idx - 1) % self.nphi
        out = self.index(ring, sector + self.nphi // 2)
        out[0] = 0
        return out

    @property
    def param_xy(self) -> np.ndarray:
        r, t = self.params[:, 0], self.params[:, 1]
        return np.stack([r * np.cos(t), r * np.sin(t)], axis=1)

    def copy_with(self, positions: np.ndarray) -> "DiskMesh":
        return DiskMesh(self.nr, self.nphi, np.array(positions, dtype=float), self.triangles, self.params)


def _triangulation(nr: int, nphi: int) -> np.ndarray:
    tris = []

    def idx(i, k):
        return 1 + (i - 1) * nphi + (k % nphi)

    for k in range(nphi):
        tris.append((0, idx(1, k), idx(1, k + 1)))
    for i in range(1, nr):
        for k in range(nphi):
            tris.append((idx(i, k), idx(i + 1, k), idx(i + 1, k + 1)))
            tris.append((idx(i, k), idx(i + 1, k + 1), idx(i, k + 1)))
    return np.array(tris, dtype=np.int64)


def _polar_params(nr: int, nphi: int) -> np.ndarray:
    r = np.repeat(np.arange(1, nr + 1) / nr, nphi)
    t = np.tile(2.0 * np.pi * np.arange(nphi) / nphi, nr)
    return np.vstack([[0.0, 0.0], np.column_stack([r, t])])


def _project_boundary(pos: np.ndarray, boundary: np.ndarray) -> None:
    pos[boundary] /= np.linalg.norm(pos[boundary], axis=1, keepdims=True)


def build_mesh(nr: int, nphi: int, init=None, symmetric: bool = True) -> DiskMesh:
    """Sample a polar-parameter disk chart (default: the flat equatorial disk)."""
    if nr < 2:
        raise MeshError(f"nr = {nr} must be at least 2")
    if nphi < 8:
        raise MeshError(f"nphi = {nphi} must be at least 8")
    if symmetric and nphi % 2:
        raise MeshError("antipodal symmetry needs an even nphi")
    if init is None:
        init = plane_disk()
    chart = init.chart if isinstance(init, ExampleSpec) else init
    if not isinstance(chart, Chart) or not chart.meta.get("polar"):
        raise MeshError("initial data must be a disk chart in polar parameters")
    params = _polar_params(nr, nphi)
    pos = chart.evaluate(params[:, 0], params[:, 1]).reshape(-1, 4).copy()
    mesh = DiskMesh(nr, nphi, pos, _triangulation(nr, nphi), params)
    if symmetric:
        pos = 0.5 * (pos - pos[mesh.antipode])
    _project_boundary(pos, mesh.boundary)
    mesh.positions = pos
    areas = _kernels.triangle_areas(pos, mesh.triangles)
    if np.min(areas) <= _kernels.DEGENERATE_AREA:
        raise MeshError("initial mesh has a degenerate triangle")
    return mesh


# -- configuration and energy -----------------------------------------------------------------


@dataclass
class SolverConfig:
    nr: int = 16
    nphi: int = 48
    lambda_omega: tuple[float, ...] = (10.0, 100.0, 1000.0)
    lambda_theta: float = 0.0
    target_theta: object = "free"  # "free" or an angle in (0, pi)
    max_iters: int = 5000
    grad_tol: float = 1e-10
    armijo: float = 1e-4
    shrink: float = 0.5
    initial_step: float = 1e-2
    step_rule: str = "lbfgs"  # "lbfgs", "bb" (Barzilai-Borwein trial steps) or "fixed"
    memory: int = 8
    energy_tol: float = 1e-12
    seed: int = 7
    amplitude: float = 0.05
    modes: int = 3
    symmetric: bool = True
    normal_motion: bool = True
    topology: str = "disk"
    backend: Optional[str] = None

    def validate(self) -> None:
        if self.topology != "disk":
            raise TopologyError(f"topology {self.topology!r} is not supported; the solver handles disks only")
        sched = list(self.lambda_omega)
        if not sched or any(x < 0 for x in sched):
            raise ValueError("lambda_omega schedule must be non-empty and non-negative")
        if any(b < a for a, b in zip(sched, sched[1:])):
            raise ValueError("lambda_omega schedule must be non-decreasing")
        if self.lambda_theta < 0:
            raise ValueError("lambda_theta must be non-negative")
        if self.target_theta != "free":
            th = float(self.target_theta)
            if not 0.0 < th < np.pi:
                raise ValueError("target_theta must lie in (0, pi)")
        if self.step_rule not in ("lbfgs", "bb", "fixed"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if self.max_iters < 0 or self.grad_tol <= 0:
            raise ValueError("max_iters must be >= 0 and grad_tol > 0")

    @property
    def free(self) -> bool:
        return self.target_theta == "free"


def boundary_conormals(mesh: DiskMesh, pos: Optional[np.ndarray] = None) -> np.ndarray:
    """Discrete outward conormal at each boundary vertex.

    Each boundary edge contributes the unit vector in its triangle's plane
    that is perpendicular to the edge and points away from the inner vertex.
    """
    pos = mesh.positions if pos is None else pos
    k = np.arange(mesh.nphi)
    b0 = pos[mesh.index(mesh.nr, k)]
    b1 = pos[mesh.index(mesh.nr, k + 1)]
    q = pos[mesh.index(mesh.nr - 1, k)]
    e = b1 - b0
    e /= np.linalg.norm(e, axis=1, keepdims=True)
    w = b0 - q
    n = w - np.sum(w * e, axis=1, keepdims=True) * e
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    mu = n + np.roll(n, 1, axis=0)  # edge k and edge k-1 meet at vertex k
    return mu / np.linalg.norm(mu, axis=1, keepdims=True)


def _angle_terms(mesh: DiskMesh, pos: np.ndarray, theta: float) -> np.ndarray:
    mu = boundary_conormals(mesh, pos)
    p = pos[mesh.boundary]
    N = p / np.linalg.norm(p, axis=1, keepdims=True)
    mn = np.sum(mu * N, axis=1)
    mj = np.sum(mu * j_apply(N), axis=1)
    return (mn - np.sin(theta)) ** 2 + (mj - np.cos(theta)) ** 2


def _angle_energy_grad(mesh: DiskMesh, pos: np.ndarray, theta: float, h: float = 1e-6):
    """Angle penalty and its gradient by central differences on the few vertices each term touches."""
    terms = _angle_terms(mesh, pos, theta)
    grad = np.zeros_like(pos)
    touched = np.unique(
        np.concatenate([mesh.boundary, mesh.index(mesh.nr - 1, np.arange(mesh.nphi))])
    )
    for v in touched:
        for c in range(4):
            old = pos[v, c]
            pos[v, c] = old + h
            ep = np.sum(_angle_terms(mesh, pos, theta))
            pos[v, c] = old - h
            em = np.sum(_angle_terms(mesh, pos, theta))
            pos[v, c] = old
            grad[v, c] = (ep - em) / (2 * h)
    return float(np.sum(terms)), grad


@dataclass
class EnergyValue:
    total: float
    area: float
    omega_penalty: float
    angle_penalty: float
    gradient: np.ndarray
    degenerate: int


def energy(mesh: DiskMesh, config: SolverConfig, lambda_omega: Optional[float] = None, pos=None) -> EnergyValue:
    """Area + lambda_omega * sum omega^2/(2 area) [+ lambda_theta * angle penalty], with gradient."""
    pos = mesh.positions if pos is None else pos
    lam = config.lambda_omega[-1] if lambda_omega is None else lambda_omega
    area, pen, grad, bad = _kernels.triangle_terms(pos, mesh.triangles, lam, config.backend)
    ang = 0.0
    if not config.free and config.lambda_theta > 0:
        ang, ga = _angle_energy_grad(mesh, np.array(pos, dtype=float), float(config.target_theta))
        grad = grad + config.lambda_theta * ga
    total = area + lam * pen + config.lambda_theta * ang
    return EnergyValue(float(total), float(area), float(pen), float(ang), grad, int(bad))


# -- constrained descent ----------------------------------------------------------------------


def _orthonormalize(t1: np.ndarray, t2: np.ndarray):
    e1 = t1 / np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = t2 - np.sum(t2 * e1, axis=1, keepdims=True) * e1
    e2 = t2 / np.linalg.norm(t2, axis=1, keepdims=True)
    return e1, e2


def _remove(g: np.ndarray, e: np.ndarray) -> np.ndarray:
    return g - np.sum(g * e, axis=1, keepdims=True) * e


def project_gradient(mesh: DiskMesh, pos: np.ndarray, grad: np.ndarray, config: SolverConfig) -> np.ndarray:
    """Restrict a raw gradient to the admissible motions."""
    g = grad.copy()
    nr, nphi = mesh.nr, mesh.nphi
    k = np.arange(nphi)
    bnd = mesh.boundary
    if config.normal_motion:
        for i in range(1, nr):
            idx = mesh.index(i, k)
            inner = pos[mesh.index(i - 1, k)] if i > 1 else np.broadcast_to(pos[0], (nphi, 4))
            t1 = pos[mesh.index(i + 1, k)] - inner
            t2 = pos[mesh.index(i, k + 1)] - pos[mesh.index(i, k - 1)]
            e1, e2 = _orthonormalize(t1, t2)
            g[idx] = _remove(_remove(g[idx], e1), e2)
    p = pos[bnd]
    n = p / np.linalg.norm(p, axis=1, keepdims=True)
    g[bnd] = _remove(g[bnd], n)
    if config.normal_motion:
        t = pos[mesh.index(nr, k + 1)] - pos[mesh.index(nr, k - 1)]
        t = _remove(t, n)
        t /= np.linalg.norm(t, axis=1, keepdims=True)
        g[bnd] = _remove(g[bnd], t)
    if config.symmetric:
        g = 0.5 * (g - g[mesh.antipode])
        g[0] = 0.0
    return g


def _retract(mesh: DiskMesh, pos: np.ndarray) -> np.ndarray:
    _project_boundary(pos, mesh.boundary)
    return pos


@dataclass
class StageRecord:
    lambda_omega: float
    iterations: int
    converged: bool
    final_energy: float
    final_grad_norm: float


@dataclass
class SolveResult:
    mesh: DiskMesh
    energy_history: list
    stages: list
    diagnostics: dict
    converged: bool
    iterations: int
    wall_time: float
    config: SolverConfig
    failure: Optional[str] = None

    def to_dict(self) -> dict:
        """JSON-ready summary; wall time is left out so repeat runs serialise identically."""
        cfg = asdict(self.config)
        cfg["lambda_omega"] = list(cfg["lambda_omega"])
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "failure": self.failure,
            "config": cfg,
            "stages": [asdict(s) for s in self.stages],
            "diagnostics": self.diagnostics,
            "energy_history": list(self.energy_history),
        }


def _two_loop(g: np.ndarray, pairs) -> np.ndarray:
    """L-BFGS product of the inverse Hessian estimate with ``g``."""
    q = g.copy()
    alphas = []
    for s, y in reversed(pairs):
        a = float(s @ q) / float(s @ y)
        alphas.append(a)
        q -= a * y
    s, y = pairs[-1]
    q *= float(s @ y) / float(y @ y)
    for (s, y), a in zip(pairs, reversed(alphas)):
        b = float(y @ q) / float(s @ y)
        q += (a - b) * s
    return q


def _grad_norm(g: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(g, axis=1)))


def minimize(mesh: DiskMesh, config: SolverConfig, record_every: int = 1) -> SolveResult:
    """Projected gradient descent with backtracking and penalty continuation."""
    config.validate()
    start = time.perf_counter()
    pos = mesh.positions.copy()
    _retract(mesh, pos)
    history: list[float] = []
    stages: list[StageRecord] = []
    total_iters = 0
    failure = None
    n_stages = len(config.lambda_omega)
    for s_idx, lam in enumerate(config.lambda_omega):
        budget = (config.max_iters - total_iters) // (n_stages - s_idx)
        ev = energy(mesh, config, lam, pos)
        g = project_gradient(mesh, pos, ev.gradient, config)
        step = config.initial_step
        prev_pos = prev_g = None
        pairs: list[tuple[np.ndarray, np.ndarray]] = []
        it = 0
        converged = _grad_norm(g) < config.grad_tol
        if not history:
            history.append(ev.total)
        while not converged and it < budget:
            if config.step_rule == "bb" and prev_g is not None:
                s = (pos - prev_pos).ravel()
                y = (g - prev_g).ravel()
                sy = float(s @ y)
                step = float(s @ s) / sy if sy > 0 else config.initial_step
                step = min(max(step, 1e-10), 1e3)
            direction = g
            if config.step_rule == "lbfgs":
                if prev_g is not None:
                    s = (pos - prev_pos).ravel()
                    y = (g - prev_g).ravel()
                    if float(s @ y) > 1e-12 * float(y @ y):
                        pairs.append((s, y))
                        del pairs[: -config.memory]
                if pairs:
                    direction = project_gradient(mesh, pos, _two_loop(g.ravel(), pairs).reshape(g.shape), config)
                    step = 1.0
                    if float(np.sum(direction * g)) <= 0:
                        pairs.clear()
                        direction = g
                        step = config.initial_step
            gg = float(np.sum(direction * g))
            accepted = False
            for _ in range(60):
                trial = _retract(mesh, pos - step * direction)
                et = energy(mesh, config, lam, trial)
                if et.degenerate == 0 and et.total <= ev.total - config.armijo * step * gg + config.energy_tol:
                    accepted = True
                    break
                step *= config.shrink
            if not accepted:
                failure = "line search failed"
                break
            prev_pos, prev_g = pos, g
            pos, ev = trial, et
            g = project_gradient(mesh, pos, ev.gradient, config)
            it += 1
            if it % record_every == 0:
                history.append(ev.total)
            converged = _grad_norm(g) < config.grad_tol
        total_iters += it
        stages.append(StageRecord(float(lam), it, bool(converged), ev.total, _grad_norm(g)))
        if failure:
            break
    final = mesh.copy_with(pos)
    diag = flatness_metrics(final)
    diag["initial_energy"] = history[0] if history else ev.total
    diag["energy"] = ev.total
    diag["area"] = ev.area
    diag["grad_norm"] = _grad_norm(g)
    converged = bool(stages and stages[-1].converged and failure is None)
    return SolveResult(final, history, stages, diag, converged, total_iters, time.perf_counter() - start, config, failure)


# -- diagnostics -----------------------------------------------------------------------------


def plane_fit(positions: np.ndarray) -> tuple[float, np.ndarray]:
    """Residual of the best 2-plane through the origin, and its orthonormal basis (rows).

    The residual is ``|off-plane part| / |in-plane part|`` over all vertices,
    read from singular values so it stays accurate near zero (an eigenvalue
    route loses half the digits).
    """
    _, s, Vt = np.linalg.svd(positions, full_matrices=False)
    if s[1] <= 1e-7 * max(s[0], 1.0):
        raise MeshError("vertex positions do not span a 2-plane")
    return float(np.hypot(s[2], s[3]) / np.hypot(s[0], s[1])), Vt[:2]


def local_jets(mesh: DiskMesh, vertices: Sequence[int], radius_cells: float = 2.5) -> Jet:
    """Order-2 jets in the disk parameter ``z = r e^{it}`` by local least-squares quadratics."""
    xy = mesh.param_xy
    tree = cKDTree(xy)
    h = 1.0 / mesh.nr
    vertices = np.asarray(vertices)
    d1 = np.zeros((len(vertices), 2, 4))
    d2 = np.zeros((len(vertices), 2, 2, 4))
    x0 = np.zeros((len(vertices), 4))
    for n, v in enumerate(vertices):
        nb = tree.query_ball_point(xy[v], radius_cells * h)
        d = (xy[nb] - xy[v]) / h
        basis = np.column_stack([np.ones(len(nb)), d[:, 0], d[:, 1], 0.5 * d[:, 0] ** 2, d[:, 0] * d[:, 1], 0.5 * d[:, 1] ** 2])
        coef, *_ = np.linalg.lstsq(basis, mesh.positions[nb], rcond=None)
        x0[n] = coef[0]
        d1[n, 0], d1[n, 1] = coef[1] / h, coef[2] / h
        d2[n, 0, 0] = coef[3] / h**2
        d2[n, 0, 1] = d2[n, 1, 0] = coef[4] / h**2
        d2[n, 1, 1] = coef[5] / h**2
    return Jet(x0, d1, d2, None, exact=False)


def flatness_metrics(mesh: DiskMesh) -> dict:
    pos = mesh.positions
    resid, basis = plane_fit(pos)
    om = _kernels.triangle_omega_residuals(pos, mesh.triangles)
    mu = boundary_conormals(mesh)
    p = pos[mesh.boundary]
    N = p / np.linalg.norm(p, axis=1, keepdims=True)
    mn = np.sum(mu * N, axis=1)
    interior = mesh.interior
    A_int = cubic_A(local_jets(mesh, interior), check=False)
    bj = local_jets(mesh, mesh.boundary)
    A_b = cubic_A(bj, check=False).A
    t = mesh.params[mesh.boundary, 1]
    comps = polar_components_from_cartesian(A_b, 1.0, t)
    re, im = polar_combination(*comps, 1.0)
    phi_int = _phi_sup(A_int.A)
    return {
        "plane_fit_residual": resid,
        "plane_lagrangian_defect": float(abs(omega(basis[0], basis[1]))),
        "max_omega_residual": float(np.max(om)),
        "max_conormal_deviation": float(np.max(np.abs(mn - 1.0))),
        "max_conormal_distance": float(np.max(np.linalg.norm(mu - N, axis=1))),
        "discrete_A_norm": float(np.max(A_int.norm())),
        "boundary_imag_max": float(np.max(np.abs(im))),
        "boundary_real_max": float(np.max(np.abs(re))),
        "phi_sup": phi_int,
        "max_boundary_radius_error": float(np.max(np.abs(np.linalg.norm(p, axis=1) - 1.0))),
        "min_triangle_area": float(np.min(_kernels.triangle_areas(pos, mesh.triangles))),
    }


def _phi_sup(A: np.ndarray) -> float:
    phi = ((A[..., 0, 0, 0] - 3 * A[..., 0, 1, 1]) + 1j * (A[..., 1, 1, 1] - 3 * A[..., 0, 0, 1])) / 8.0
    return float(np.max(np.abs(phi)))


# -- drivers ---------------------------------------------------------------------------------


def initial_mesh(config: SolverConfig, rotation: Optional[np.ndarray] = None) -> DiskMesh:
    """Perturbed equatorial disk with boundary pinned to the sphere, optionally rotated."""
    spec = perturb(plane_disk(), config.amplitude, mode=config.modes, seed=config.seed, pin_boundary=True)
    mesh = build_mesh(config.nr, config.nphi, spec, symmetric=config.symmetric)
    if rotation is not None:
        mesh = mesh.copy_with(mesh.positions @ np.asarray(rotation).T)
    return mesh


def solve(config: SolverConfig, rotation: Optional[np.ndarray] = None, mesh: Optional[DiskMesh] = None) -> SolveResult:
    config.validate()
    if mesh is None:
        mesh = initial_mesh(config, rotation)
    return minimize(mesh, config)


# -- mesh I/O ----------------------------------------------------------------------------------

MESH_HEADER = "u,v,x1,x2,y1,y2"  # u, v are the polar parameters (r, angle)


def write_mesh_csv(mesh: DiskMesh, path) -> None:
    data = np.column_stack([mesh.params, mesh.positions])
    np.savetxt(path, data, delimiter=",", header=MESH_HEADER, comments="", fmt="%.17g")


def read_mesh_csv(path) -> DiskMesh:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    params, pos = data[:, :2], data[:, 2:6]
    rings = np.unique(np.round(params[1:, 0], 12))
    nr = len(rings)
    nphi = (len(pos) - 1) // nr
    if 1 + nr * nphi != len(pos):
        raise MeshError("CSV does not describe a polar disk mesh")
    expected = _polar_params(nr, nphi)
    if not np.allclose(params, expected, atol=1e-12):
        raise MeshError("CSV vertex order does not match the polar layout")
    return DiskMesh(nr, nphi, pos.copy(), _triangulation(nr, nphi), expected)


def write_mesh_obj(mesh: DiskMesh, path) -> None:
    with open(path, "w") as fh:
        fh.write("# first three coordinates as vertices; fourth coordinate in 'vy2' lines\n")
        for x in mesh.positions:
            fh.write(f"v {x[0]:.17g} {x[1]:.17g} {x[2]:.17g}\n")
        for x in mesh.positions:
            fh.write(f"# vy2 {x[3]:.17g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")
