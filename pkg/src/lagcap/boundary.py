"""Boundary traces of surfaces meeting a round sphere.

For a chart boundary curve lying on the sphere of radius ``R`` about the
origin, :func:`boundary_frame` builds the adapted frame: unit tangent ``T``,
outward conormal ``mu``, sphere normal ``N = p / R`` and Reeb direction
``xi = J N``.  The contact angle is ``atan2(<mu, N>, <mu, JN>)`` reduced
mod pi; before the reduction ``mu = sin(theta) N + cos(theta) JN`` whenever
``mu`` lies in that plane.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .ambient import j_apply
from .charts import Boundary, Chart, jet
from .curvature import cubic_A

ON_SPHERE_TOL = 1e-8
JOACHIMSTHAL_STEP = 1e-5 * 2.0 * np.pi


class OffSphereError(ValueError):
    """Boundary curve does not lie on the requested sphere."""


@dataclass
class BoundaryFrame:
    """Adapted frames at boundary samples; every field is batched over samples."""

    s: np.ndarray
    p: np.ndarray
    T: np.ndarray
    mu: np.ndarray
    N: np.ndarray
    xi: np.ndarray
    theta: np.ndarray
    mu_dot_N: np.ndarray
    mu_dot_JN: np.ndarray
    legendrian_residual: np.ndarray
    span_residual: np.ndarray
    reconstruction_residual: np.ndarray
    inward_flag: np.ndarray  # <mu, N> < 0
    speed: np.ndarray  # |d curve / ds|
    radius: float

    def __len__(self) -> int:
        return int(np.size(self.s))


def _boundary_of(chart: Chart, boundary) -> Boundary:
    if isinstance(boundary, Boundary):
        return boundary
    if not chart.boundaries:
        raise ValueError(f"chart {chart.name!r} has no designated boundary")
    return chart.boundaries[int(boundary)]


def _unit(x: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise ValueError("degenerate boundary frame")
    return x / n


def _frame_from_jet(s, x, along, across, outward, radius, tol) -> BoundaryFrame:
    r = np.linalg.norm(x, axis=-1)
    if np.any(np.abs(r - radius) > tol * max(1.0, radius)):
        worst = float(np.max(np.abs(r - radius)))
        raise OffSphereError(f"boundary deviates from the sphere of radius {radius:g} by {worst:.3e}")
    speed = np.linalg.norm(along, axis=-1)
    T = _unit(along)
    mu = across - np.sum(across * T, axis=-1, keepdims=True) * T
    mu = outward * _unit(mu)
    N = x / r[..., None]
    JN = j_apply(N)
    mn = np.sum(mu * N, axis=-1)
    mj = np.sum(mu * JN, axis=-1)
    raw = np.arctan2(mn, mj)
    # reported in [0, pi); an inward conormal is recorded by inward_flag instead
    theta = np.mod(raw, np.pi)
    theta = np.where(theta >= np.pi, 0.0, theta)
    span = np.linalg.norm(mu - mn[..., None] * N - mj[..., None] * JN, axis=-1)
    recon = np.linalg.norm(mu - np.sin(raw)[..., None] * N - np.cos(raw)[..., None] * JN, axis=-1)
    return BoundaryFrame(
        s=np.asarray(s, dtype=float),
        p=x,
        T=T,
        mu=mu,
        N=N,
        xi=JN,
        theta=theta,
        mu_dot_N=mn,
        mu_dot_JN=mj,
        legendrian_residual=np.abs(np.sum(JN * T, axis=-1)),
        span_residual=span,
        reconstruction_residual=recon,
        inward_flag=mn < 0,
        speed=speed,
        radius=float(radius),
    )


def boundary_frame(
    chart: Chart,
    s,
    boundary=0,
    radius: float = 1.0,
    tol: float = ON_SPHERE_TOL,
    jet_method: str = "auto",
) -> BoundaryFrame:
    """Adapted frame at boundary parameters ``s`` (the free chart parameter)."""
    b = _boundary_of(chart, boundary)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    u, v = b.params(s)
    j = jet(chart, u, v, 1, method=jet_method)
    along = j.d1[..., 1 - b.index, :]
    across = j.d1[..., b.index, :]
    return _frame_from_jet(s, j.x, along, across, b.outward, radius, tol)


def boundary_samples(chart: Chart, samples: int, boundary=0) -> np.ndarray:
    """Evenly spaced parameters along a boundary (endpoint dropped when periodic)."""
    b = _boundary_of(chart, boundary)
    axis = 1 - b.index
    lo, hi = chart.domain.bounds[axis]
    if chart.domain.periodic[axis]:
        return lo + (hi - lo) * np.arange(samples) / samples
    return np.linspace(lo, hi, samples)


@dataclass
class LegendrianReport:
    max_legendrian: float
    mean_legendrian: float
    max_span: float
    mean_span: float
    tol: float
    passed: bool
    legendrian_pass: bool
    span_pass: bool
    coupled: bool  # the two residuals are within a factor 10 of each other pointwise


def legendrian_check(frames: BoundaryFrame | Sequence[BoundaryFrame], tol: float) -> LegendrianReport:
    if isinstance(frames, BoundaryFrame):
        frames = [frames]
    frames = list(frames)
    if not frames:
        raise ValueError("legendrian_check needs at least one frame")
    leg = np.concatenate([np.ravel(f.legendrian_residual) for f in frames])
    span = np.concatenate([np.ravel(f.span_residual) for f in frames])
    leg_ok = bool(leg.max() < tol)
    span_ok = bool(span.max() < tol)
    coupled = bool(np.all(span < 10 * leg + 1e-12) and np.all(leg < 10 * span + 1e-12))
    return LegendrianReport(
        float(leg.max()),
        float(leg.mean()),
        float(span.max()),
        float(span.mean()),
        tol,
        leg_ok and span_ok,
        leg_ok,
        span_ok,
        coupled,
    )


@dataclass
class AngleProfile:
    s: np.ndarray
    theta: np.ndarray
    spread: float  # max - min
    std: float
    capillary: bool
    free_boundary: bool
    frames: BoundaryFrame


def contact_angle_profile(
    chart: Chart,
    samples: int,
    boundary=0,
    radius: float = 1.0,
    tol: float = 1e-8,
    legendrian_tol: float = 1e-8,
) -> AngleProfile:
    """Contact angle along a Legendrian boundary; capillary iff it is constant."""
    s = boundary_samples(chart, samples, boundary)
    fr = boundary_frame(chart, s, boundary, radius)
    rep = legendrian_check(fr, legendrian_tol)
    if not rep.passed:
        raise ValueError(
            f"boundary is not Legendrian (residual {rep.max_legendrian:.3e}); contact angle undefined"
        )
    theta = fr.theta
    spread = float(theta.max() - theta.min())
    capillary = spread < tol
    free = capillary and bool(np.all(np.abs(theta - np.pi / 2) < tol))
    return AngleProfile(s, theta, spread, float(np.std(theta)), capillary, free, fr)


def _coordinate_vector(j_d1: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Coordinates ``c`` with ``c_i X_i = w`` for tangent ``w``."""
    g = np.einsum("...ia,...ja->...ij", j_d1, j_d1)
    rhs = np.einsum("...ia,...a->...i", j_d1, w)
    return np.linalg.solve(g, rhs[..., None])[..., 0]


def cubic_on_frame(chart: Chart, s, boundary=0, radius: float = 1.0) -> tuple[np.ndarray, np.ndarray, BoundaryFrame]:
    """``A(T, T, mu)`` and ``A(T, mu, mu)`` at boundary samples."""
    b = _boundary_of(chart, boundary)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    u, v = b.params(s)
    j = jet(chart, u, v, 2)
    fr = boundary_frame(chart, s, b, radius)
    A = cubic_A(j)
    t = _coordinate_vector(j.d1, fr.T)
    m = _coordinate_vector(j.d1, fr.mu)
    return A.contract(t, t, m), A.contract(t, m, m), fr


@dataclass
class JoachimsthalResult:
    s: np.ndarray
    lhs: np.ndarray  # A(T, mu, mu)
    rhs: np.ndarray  # -D_T theta
    residual: np.ndarray


def joachimsthal_residual(
    chart: Chart, s, boundary=0, radius: float = 1.0, step: float = JOACHIMSTHAL_STEP
) -> JoachimsthalResult:
    """Compare ``A(T, mu, mu)`` with minus the arc-length derivative of the angle."""
    b = _boundary_of(chart, boundary)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    axis = 1 - b.index
    lo, hi = chart.domain.bounds[axis]
    if not chart.domain.periodic[axis] and (np.any(s - step < lo) or np.any(s + step > hi)):
        raise ValueError("boundary difference stencil leaves the chart domain")
    _, lhs, fr = cubic_on_frame(chart, s, b, radius)
    plus = boundary_frame(chart, s + step, b, radius).theta
    minus = boundary_frame(chart, s - step, b, radius).theta
    dtheta = 0.5 * np.angle(np.exp(2j * (plus - minus))) / (2 * step)  # theta lives mod pi
    rhs = -dtheta / fr.speed
    return JoachimsthalResult(s, lhs, rhs, np.abs(lhs - rhs))


def frames_table(fr: BoundaryFrame) -> np.ndarray:
    """Rows ``s, T, mu, N, xi, theta`` for export."""
    return np.column_stack([fr.s, fr.T, fr.mu, fr.N, fr.xi, fr.theta])


FRAME_COLUMNS = (
    ["s"]
    + [f"t{i}" for i in range(1, 5)]
    + [f"mu{i}" for i in range(1, 5)]
    + [f"n{i}" for i in range(1, 5)]
    + [f"xi{i}" for i in range(1, 5)]
    + ["theta"]
)


def radius_of(chart: Chart, boundary=0, samples: int = 16) -> Optional[float]:
    """Mean distance from the origin along a boundary curve."""
    b = _boundary_of(chart, boundary)
    s = boundary_samples(chart, samples, b)
    u, v = b.params(s)
    return float(np.mean(np.linalg.norm(chart.evaluate(u, v), axis=-1)))
