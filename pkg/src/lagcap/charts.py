"""Parametrized surface pieces in R^4 and their jets.

A chart is a map ``(u, v) -> R^4`` over a rectangular parameter domain, possibly
periodic in ``v``.  Charts built from a *formula* (a function of ``(u, v, m)``
where ``m`` is a math namespace) get exact jets through Taylor arithmetic.
Charts built from a plain numeric evaluator fall back to finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import taylor
from .ambient import j_apply, omega
from .taylor import Taylor

EPS = np.finfo(float).eps


class DomainError(ValueError):
    """Parameters outside the chart domain."""


class DegenerateJetError(ValueError):
    """First partials are (numerically) linearly dependent."""


@dataclass(frozen=True)
class ChartDomain:
    kind: str  # rectangle | polar-disk | polar-annulus | sphere-band
    bounds: tuple[tuple[float, float], tuple[float, float]]
    periodic: tuple[bool, bool] = (False, False)

    def __post_init__(self):
        (a, b), (c, d) = self.bounds
        if not (b > a and d > c):
            raise ValueError(f"empty chart domain {self.bounds}")

    def period(self, axis: int) -> Optional[float]:
        if not self.periodic[axis]:
            return None
        lo, hi = self.bounds[axis]
        return hi - lo

    def contains(self, u, v, tol: float = 1e-12) -> np.ndarray:
        ok = np.ones(np.broadcast(u, v).shape, dtype=bool)
        for axis, x in enumerate((u, v)):
            if self.periodic[axis]:
                continue
            lo, hi = self.bounds[axis]
            scale = max(1.0, abs(lo), abs(hi))
            ok &= (np.asarray(x) >= lo - tol * scale) & (np.asarray(x) <= hi + tol * scale)
        return ok

    def grid(self, n_u: int, n_v: int, margin: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Tensor grid; periodic axes omit the duplicated endpoint.

        ``margin`` is a fraction of the extent trimmed from non-periodic ends.
        """
        axes = []
        for axis, n in enumerate((n_u, n_v)):
            lo, hi = self.bounds[axis]
            if self.periodic[axis]:
                axes.append(lo + (hi - lo) * np.arange(n) / n)
            else:
                pad = margin * (hi - lo)
                axes.append(np.linspace(lo + pad, hi - pad, n))
        return np.meshgrid(axes[0], axes[1], indexing="ij")


@dataclass(frozen=True)
class Boundary:
    """A boundary curve ``param[index] = value`` of a chart.

    The curve is parametrized by the other chart parameter.  ``outward`` is
    +1 when increasing ``param[index]`` leaves the surface, -1 otherwise.
    """

    index: int
    value: float
    outward: int
    name: str = ""

    def params(self, s):
        s = np.asarray(s, dtype=float)
        fixed = np.full_like(s, self.value)
        return (fixed, s) if self.index == 0 else (s, fixed)


@dataclass
class Jet:
    """Position and partial derivatives at one or many points.

    ``d1[..., i, :]`` is ``X_i``, ``d2[..., i, j, :]`` is ``X_ij`` and
    ``d3[..., i, j, k, :]`` is ``X_ijk`` (index 0 is ``u``, 1 is ``v``).
    """

    x: np.ndarray
    d1: np.ndarray
    d2: Optional[np.ndarray] = None
    d3: Optional[np.ndarray] = None
    exact: bool = True

    @property
    def order(self) -> int:
        return 1 + (self.d2 is not None) + (self.d3 is not None)

    @property
    def X_u(self):
        return self.d1[..., 0, :]

    @property
    def X_v(self):
        return self.d1[..., 1, :]

    @property
    def X_uu(self):
        return self.d2[..., 0, 0, :]

    @property
    def X_uv(self):
        return self.d2[..., 0, 1, :]

    @property
    def X_vv(self):
        return self.d2[..., 1, 1, :]

    def take(self, idx) -> "Jet":
        return Jet(
            self.x[idx],
            self.d1[idx],
            None if self.d2 is None else self.d2[idx],
            None if self.d3 is None else self.d3[idx],
            self.exact,
        )

    def transformed(self, matrix: np.ndarray, offset=None) -> "Jet":
        """Jet of ``matrix @ X + offset``."""
        m = np.asarray(matrix, dtype=float)
        x = self.x @ m.T
        if offset is not None:
            x = x + offset
        return Jet(
            x,
            self.d1 @ m.T,
            None if self.d2 is None else self.d2 @ m.T,
            None if self.d3 is None else self.d3 @ m.T,
            self.exact,
        )


Formula = Callable[..., Sequence]


@dataclass
class Chart:
    """An immersed surface piece ``(u, v) -> R^4``.

    Exactly one of ``formula`` (Taylor-capable) or ``evaluator`` (numeric
    only) is normally given; a formula also serves as the evaluator.
    """

    domain: ChartDomain
    formula: Optional[Formula] = None
    evaluator: Optional[Callable] = None
    isothermal_claimed: bool = False
    boundaries: tuple[Boundary, ...] = ()
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.formula is None and self.evaluator is None:
            raise ValueError("chart needs a formula or an evaluator")

    @property
    def has_exact_jets(self) -> bool:
        return self.formula is not None

    def evaluate(self, u, v) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.evaluator is not None:
            return np.asarray(self.evaluator(u, v), dtype=float)
        comps = self.formula(u, v, taylor.math)
        shape = np.broadcast(u, v).shape
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), shape) for c in comps], axis=-1)

    def exact_jet(self, u, v, order: int) -> Jet:
        if self.formula is None:
            raise ValueError(f"chart {self.name!r} has no exact jets")
        tu, tv = Taylor.variables(u, v, order)
        comps = [
            c if isinstance(c, Taylor) else Taylor.constant(c, order, tu.batch_shape)
            for c in self.formula(tu, tv, taylor.math)
        ]
        shape = tu.batch_shape

        def d(i, j):
            return np.stack([np.broadcast_to(c.derivative(i, j), shape) for c in comps], axis=-1)

        x = d(0, 0)
        d1 = np.stack([d(1, 0), d(0, 1)], axis=-2)
        d2 = d3 = None
        if order >= 2:
            xuv = d(1, 1)
            d2 = np.stack(
                [np.stack([d(2, 0), xuv], axis=-2), np.stack([xuv, d(0, 2)], axis=-2)], axis=-3
            )
        if order >= 3:
            d3 = _symmetric3(d(3, 0), d(2, 1), d(1, 2), d(0, 3))
        return Jet(x, d1, d2, d3, exact=True)

    def transformed(self, matrix: np.ndarray, offset=None, name: str = "") -> "Chart":
        """The chart composed with the affine map ``x -> matrix @ x + offset``."""
        m = np.asarray(matrix, dtype=float)
        off = None if offset is None else np.asarray(offset, dtype=float)
        if self.formula is not None:
            base = self.formula

            def formula(u, v, mm):
                comps = list(base(u, v, mm))
                out = []
                for r in range(4):
                    acc = 0.0 if off is None else float(off[r])
                    for c in range(4):
                        if m[r, c] != 0.0:
                            acc = comps[c] * float(m[r, c]) + acc
                    out.append(acc)
                return out

            return Chart(self.domain, formula=formula, isothermal_claimed=self.isothermal_claimed,
                         boundaries=self.boundaries, name=name or self.name, meta=dict(self.meta))
        base_eval = self.evaluate

        def evaluator(u, v):
            x = base_eval(u, v) @ m.T
            return x if off is None else x + off

        return Chart(self.domain, evaluator=evaluator, isothermal_claimed=self.isothermal_claimed,
                     boundaries=self.boundaries, name=name or self.name, meta=dict(self.meta))


def _symmetric3(xuuu, xuuv, xuvv, xvvv) -> np.ndarray:
    shape = xuuu.shape[:-1] + (2, 2, 2, 4)
    d3 = np.empty(shape)
    table = {0: xuuu, 1: xuuv, 2: xuvv, 3: xvvv}
    for i in range(2):
        for j in range(2):
            for k in range(2):
                d3[..., i, j, k, :] = table[i + j + k]
    return d3


# -- finite differences --------------------------------------------------------------


def fd_weights(offsets: Sequence[float], order: int) -> np.ndarray:
    """Weights of the ``order``-th derivative at 0 on the given offsets (Fornberg)."""
    x = np.asarray(offsets, dtype=float)
    n = len(x)
    c = np.zeros((n, order + 1))
    c1 = 1.0
    c4 = x[0]
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


_CENTRAL = {
    0: np.array([0.0]),
    1: np.array([-1.0, 1.0]),
    2: np.array([-1.0, 0.0, 1.0]),
    3: np.array([-2.0, -1.0, 1.0, 2.0]),
}


MIN_SHRINK = 0.25


def fd_step(order: int, x: float = 0.0) -> float:
    """Base step for a derivative of total order ``order``.

    Balances rounding (``eps / h**order``) against the ``h**4`` truncation
    left after one Richardson level, hence ``eps ** (1 / (order + 4))``.
    """
    return EPS ** (1.0 / (order + 4)) * max(1.0, abs(x))


def _multi_indices(order: int):
    return [(i, k - i) for k in range(order + 1) for i in range(k, -1, -1)]


def _tensor_fd(f, u, v, i, j, hu, hv, su, sv):
    """Tensor-product stencil; ``su``/``sv`` are (offsets, weights) pairs."""
    (ou, wu), (ov, wv) = su, sv
    acc = 0.0
    for a, wa in zip(ou, wu):
        if wa == 0.0:
            continue
        for b, wb in zip(ov, wv):
            if wb == 0.0:
                continue
            acc = acc + (wa * wb) * f(u + a * hu, v + b * hv)
    return acc / np.asarray(hu**i * hv**j)[..., None]


def _central(order: int):
    off = _CENTRAL[order]
    return off, fd_weights(off, order)


def _central_wide(order: int):
    # fourth-order accurate central stencil, for points where Richardson is not applied
    half = 2 if order <= 2 else 3
    off = np.arange(-half, half + 1, dtype=float)
    return off, fd_weights(off, order)


def _one_sided(order: int, direction: int):
    off = direction * np.arange(order + 6, dtype=float)
    return off, fd_weights(off, order)


def fd_jet(chart: Chart, u, v, order: int = 2, richardson: bool = True) -> Jet:
    """Finite-difference jet with one Richardson level on central stencils.

    Close to a non-periodic edge the central stencil is first shrunk to fit;
    right at the edge it becomes one-sided (``order + 6`` points, sixth-order,
    no extrapolation), which can cost up to a digit on third derivatives.
    """
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    f = chart.evaluate
    shape = u.shape
    out = {}
    flat_u, flat_v = u.ravel(), v.ravel()
    reach = 2.0  # widest central offset, in steps
    # near a non-periodic edge the central stencil is shrunk to fit; below
    # MIN_SHRINK of the nominal step a one-sided stencil is used instead
    shrink = np.ones(flat_u.shape + (2,))
    edge_dirs = np.zeros(flat_u.shape + (2,), dtype=int)
    for axis, x in enumerate((flat_u, flat_v)):
        if chart.domain.periodic[axis]:
            continue
        lo, hi = chart.domain.bounds[axis]
        h = np.array([fd_step(order, xi) for xi in x]) * reach
        shrink[:, axis] = np.clip(np.minimum(x - lo, hi - x) / h, 0.0, 1.0)
        edge_dirs[:, axis] = np.where(x - lo < hi - x, 1, -1)
    central_ok = np.all(shrink >= MIN_SHRINK, axis=1)
    edge_dirs[shrink >= MIN_SHRINK] = 0

    for (i, j) in _multi_indices(order):
        k = i + j
        res = np.zeros(flat_u.shape + (4,))
        if k == 0:
            res = f(flat_u, flat_v).reshape(-1, 4)
        else:
            hu = np.array([fd_step(k, x) for x in flat_u])[:, None] * shrink[:, :1]
            hv = np.array([fd_step(k, x) for x in flat_v])[:, None] * shrink[:, 1:]
            idx = np.nonzero(central_ok)[0]
            if idx.size:
                uu, vv, hhu, hhv = flat_u[idx], flat_v[idx], hu[idx, 0], hv[idx, 0]

                def g(a, b):
                    return f(a, b).reshape(-1, 4)

                su, sv = _central(i), _central(j)
                big = _tensor_fd(g, uu, vv, i, j, hhu, hhv, su, sv)
                if richardson:
                    small = _tensor_fd(g, uu, vv, i, j, hhu / 2, hhv / 2, su, sv)
                    res[idx] = (4.0 * small - big) / 3.0
                else:
                    res[idx] = big
            for p in np.nonzero(~central_ok)[0]:
                stencils = []
                for axis, n in enumerate((i, j)):
                    d = edge_dirs[p, axis]
                    if n == 0:
                        stencils.append(_central(0))
                    else:
                        stencils.append(_central_wide(n) if d == 0 else _one_sided(n, d))

                def g1(a, b):
                    return f(np.atleast_1d(a), np.atleast_1d(b)).reshape(-1, 4)

                h1u = fd_step(k, flat_u[p]) * (1.0 if edge_dirs[p, 0] else shrink[p, 0])
                h1v = fd_step(k, flat_v[p]) * (1.0 if edge_dirs[p, 1] else shrink[p, 1])
                res[p] = _tensor_fd(g1, flat_u[p], flat_v[p], i, j, h1u, h1v, *stencils)[0]
        out[(i, j)] = res.reshape(shape + (4,))

    x = out[(0, 0)]
    d1 = np.stack([out[(1, 0)], out[(0, 1)]], axis=-2)
    d2 = d3 = None
    if order >= 2:
        d2 = np.stack(
            [np.stack([out[(2, 0)], out[(1, 1)]], axis=-2), np.stack([out[(1, 1)], out[(0, 2)]], axis=-2)],
            axis=-3,
        )
    if order >= 3:
        d3 = _symmetric3(out[(3, 0)], out[(2, 1)], out[(1, 2)], out[(0, 3)])
    return Jet(x, d1, d2, d3, exact=False)


def jet(chart: Chart, u, v, order: int = 2, method: str = "auto") -> Jet:
    """Jet of ``chart`` at ``(u, v)`` up to ``order`` (1, 2 or 3).

    ``method`` is ``"exact"``, ``"fd"`` or ``"auto"`` (exact when available).
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    if not np.all(chart.domain.contains(u, v)):
        raise DomainError(f"parameters outside domain {chart.domain.bounds}")
    if method == "auto":
        method = "exact" if chart.has_exact_jets else "fd"
    if method == "exact":
        return chart.exact_jet(u, v, order)
    if method == "fd":
        return fd_jet(chart, u, v, order)
    raise ValueError(f"unknown jet method {method!r}")


# -- frames and the Lagrangian condition ---------------------------------------------


@dataclass
class TangentFrame:
    e1: np.ndarray
    e2: np.ndarray
    n1: np.ndarray
    n2: np.ndarray


def check_immersion(j: Jet, tol: float = 1e-12) -> None:
    g11 = np.sum(j.X_u**2, axis=-1)
    g22 = np.sum(j.X_v**2, axis=-1)
    g12 = np.sum(j.X_u * j.X_v, axis=-1)
    denom = g11 * g22
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(denom > 0, (denom - g12**2) / denom, 0.0)
    if np.any(~(rel > tol)):
        raise DegenerateJetError("first partials are linearly dependent")


def tangent_frame(j: Jet) -> TangentFrame:
    check_immersion(j)
    e1 = j.X_u / np.linalg.norm(j.X_u, axis=-1, keepdims=True)
    w = j.X_v - np.sum(j.X_v * e1, axis=-1, keepdims=True) * e1
    e2 = w / np.linalg.norm(w, axis=-1, keepdims=True)
    return TangentFrame(e1, e2, j_apply(e1), j_apply(e2))


def lagrangian_residual(j: Jet) -> np.ndarray:
    """``|omega(X_u, X_v)| / (|X_u| |X_v|)``."""
    check_immersion(j)
    num = np.abs(omega(j.X_u, j.X_v))
    return num / (np.linalg.norm(j.X_u, axis=-1) * np.linalg.norm(j.X_v, axis=-1))


def lagrangian_normal_residual(j: Jet) -> np.ndarray:
    """``max_ij |<J e_i, e_j>|``: how far ``J(T)`` is from the normal bundle."""
    fr = tangent_frame(j)
    es = (fr.e1, fr.e2)
    ns = (fr.n1, fr.n2)
    return np.max(
        np.stack([np.abs(np.sum(n * e, axis=-1)) for n in ns for e in es], axis=-1), axis=-1
    )


def gram(j: Jet) -> np.ndarray:
    return np.einsum("...ia,...ja->...ij", j.d1, j.d1)
