"""Intrinsic and extrinsic geometry of Lagrangian surfaces in R^4.

All tensors are kept in the chart coordinate basis; orthonormal components
are produced only for norms and reporting.  Index conventions:

* ``g[..., i, j]``, ``gamma[..., k, i, j]`` = Christoffel symbol of the 2nd kind
* ``A[..., i, j, k] = <h(X_i, X_j), J X_k>``
* ``nabla_A[..., i, j, k, l] = A_{ijk,l}`` (last index differentiates)
* ``H[..., k] = g^{ij} A_{ijk} = <H, J X_k>`` and ``dH[..., k, l] = H_{k,l}``

Arrays broadcast over any leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Optional

import numpy as np

from .ambient import j_apply
from .charts import Chart, Jet, check_immersion, jet, lagrangian_residual

DIM = 2
NORM_FLOOR = 1e-12


class NotLagrangianError(ValueError):
    """The cubic form is only symmetric on Lagrangian immersions."""


@dataclass
class MetricData:
    g: np.ndarray
    ginv: np.ndarray
    gamma: np.ndarray
    area_element: np.ndarray


@dataclass
class CubicTensor:
    A: np.ndarray
    g: np.ndarray

    def orthonormal(self) -> np.ndarray:
        return to_orthonormal(self.A, self.g)

    def norm(self) -> np.ndarray:
        return tensor_norm(self.A, self.g)

    def symmetry_defect(self) -> np.ndarray:
        """Relative deviation from total symmetry (orthonormal components)."""
        a = self.orthonormal()
        worst = np.zeros(a.shape[:-3])
        for p in permutations(range(3)):
            diff = np.abs(a - np.transpose(a, tuple(range(a.ndim - 3)) + tuple(a.ndim - 3 + q for q in p)))
            worst = np.maximum(worst, diff.max(axis=(-1, -2, -3)))
        return worst / np.maximum(self.norm(), NORM_FLOOR)

    def contract(self, a, b, c) -> np.ndarray:
        """``A(a, b, c)`` for coordinate vectors ``a, b, c`` (shape ``(..., 2)``)."""
        return np.einsum("...ijk,...i,...j,...k->...", self.A, a, b, c)


@dataclass
class MeanCurvature:
    H_lower: np.ndarray  # <H, J X_k>
    H_upper: np.ndarray  # g^{kl} H_l
    H: Optional[np.ndarray]  # normal vector in R^4, when a jet was supplied
    norm: np.ndarray  # |H|
    minimality_residual: np.ndarray


# -- tensor utilities -----------------------------------------------------------------


def orthonormal_factor(g: np.ndarray) -> np.ndarray:
    """``F`` with ``F^T g F = I`` (columns are an orthonormal frame)."""
    L = np.linalg.cholesky(g)
    return np.swapaxes(np.linalg.inv(L), -1, -2)


def to_orthonormal(T: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Components of an all-lower-index tensor in the orthonormal frame."""
    F = orthonormal_factor(g)
    rank = T.ndim - g.ndim + 2
    out = T
    for axis in range(rank):
        # contract the axis-th tensor index with F[..., i, a]
        pos = out.ndim - rank + axis
        out = np.moveaxis(out, pos, -1)
        out = np.einsum("...i,...ia->...a", out, _expand(F, out.ndim - 1 - g.ndim + 2))
        out = np.moveaxis(out, -1, pos)
    return out


def _expand(F: np.ndarray, extra: int) -> np.ndarray:
    # insert singleton axes between batch and matrix axes for broadcasting
    batch = F.shape[:-2]
    return F.reshape(batch + (1,) * extra + F.shape[-2:])


def tensor_norm(T: np.ndarray, g: np.ndarray) -> np.ndarray:
    rank = T.ndim - g.ndim + 2
    on = to_orthonormal(T, g)
    return np.sqrt(np.sum(on**2, axis=tuple(range(-rank, 0))))


# -- first and second fundamental forms ---------------------------------------------


def metric(j: Jet) -> MetricData:
    check_immersion(j)
    g = np.einsum("...ia,...ja->...ij", j.d1, j.d1)
    ginv = np.linalg.inv(g)
    gamma = None
    if j.d2 is not None:
        first_kind = np.einsum("...ija,...ma->...mij", j.d2, j.d1)
        gamma = np.einsum("...km,...mij->...kij", ginv, first_kind)
    return MetricData(g, ginv, gamma, np.sqrt(np.linalg.det(g)))


def second_fundamental(j: Jet, md: Optional[MetricData] = None) -> np.ndarray:
    """Normal vectors ``h[..., i, j, :]`` = normal part of ``X_ij``."""
    if j.d2 is None:
        raise ValueError("second fundamental form needs an order-2 jet")
    md = md or metric(j)
    tangential = np.einsum("...kij,...ka->...ija", md.gamma, j.d1)
    return j.d2 - tangential


def cubic_A(j: Jet, check: bool = True, tol: float = 1e-8) -> CubicTensor:
    """``A_ijk = <h(X_i, X_j), J X_k>``; raises on non-Lagrangian points if ``check``."""
    if check:
        res = lagrangian_residual(j)
        if np.any(res > tol):
            raise NotLagrangianError(f"Lagrangian residual {np.max(res):.3e} exceeds {tol:g}")
    md = metric(j)
    h = second_fundamental(j, md)
    A = np.einsum("...ija,...ka->...ijk", h, j_apply(j.d1))
    return CubicTensor(A, md.g)


def mean_curvature(A: CubicTensor, md: MetricData, j: Optional[Jet] = None) -> MeanCurvature:
    H_lower = np.einsum("...ij,...ijk->...k", md.ginv, A.A)
    H_upper = np.einsum("...kl,...l->...k", md.ginv, H_lower)
    norm = np.sqrt(np.maximum(np.einsum("...k,...k->...", H_lower, H_upper), 0.0))
    H = None
    if j is not None:
        H = np.einsum("...k,...ka->...a", H_upper, j_apply(j.d1))
    resid = norm / np.maximum(A.norm(), NORM_FLOOR)
    return MeanCurvature(H_lower, H_upper, H, norm, resid)


def abreve(A: CubicTensor, md: MetricData, H_lower: np.ndarray, n: int = DIM) -> CubicTensor:
    """Trace-free part ``A_ijk - (H_k g_ij + H_i g_jk + H_j g_ik) / (n + 2)``."""
    g = md.g
    trace = (
        np.einsum("...k,...ij->...ijk", H_lower, g)
        + np.einsum("...i,...jk->...ijk", H_lower, g)
        + np.einsum("...j,...ik->...ijk", H_lower, g)
    )
    return CubicTensor(A.A - trace / (n + 2), g)


def trace_defect(T: CubicTensor, md: MetricData) -> np.ndarray:
    """Largest ``|g^{ab} T(a, b, .)|`` over index pairs, in orthonormal units."""
    on = T.orthonormal()
    traces = [
        np.einsum("...aak->...k", on),
        np.einsum("...aka->...k", on),
        np.einsum("...kaa->...k", on),
    ]
    return np.max(np.abs(np.stack(traces, axis=-1)), axis=(-1, -2))


def weingarten_residual(j: Jet) -> np.ndarray:
    """Residual of ``<h(X_i,X_j), JX_k> = -<D_{X_i} JX_j, X_k> = <JX_j, h(X_i,X_k)>``.

    ``D_{X_i}(J X_j) = J X_ij`` in flat space, so the middle term only uses
    second partials and the ambient complex structure.
    """
    A = cubic_A(j, check=False)
    W = -np.einsum("...ija,...ka->...ijk", j_apply(j.d2), j.d1)
    Aswap = np.swapaxes(A.A, -1, -2)
    on_diff1 = to_orthonormal(A.A - W, A.g)
    on_diff2 = to_orthonormal(W - Aswap, A.g)
    worst = np.maximum(np.abs(on_diff1).max(axis=(-1, -2, -3)), np.abs(on_diff2).max(axis=(-1, -2, -3)))
    return worst / np.maximum(A.norm(), NORM_FLOOR)


# -- covariant derivatives ------------------------------------------------------------


@dataclass
class DerivativeData:
    """Everything downstream checks need at a batch of points."""

    metric: MetricData
    A: CubicTensor
    dA: np.ndarray  # partial derivatives, [..., i, j, k, l]
    nabla_A: np.ndarray
    H_lower: np.ndarray
    dH: np.ndarray  # covariant H_{k,l}
    method: str
    exact: bool


def _christoffel_contractions(gamma: np.ndarray, A: np.ndarray) -> np.ndarray:
    """``sum_m Gamma^m_li A_mjk + Gamma^m_lj A_imk + Gamma^m_lk A_ijm`` as [i,j,k,l]."""
    return (
        np.einsum("...mli,...mjk->...ijkl", gamma, A)
        + np.einsum("...mlj,...imk->...ijkl", gamma, A)
        + np.einsum("...mlk,...ijm->...ijkl", gamma, A)
    )


def derivative_data_from_jet(j: Jet) -> DerivativeData:
    """Covariant derivative of A from an order-3 jet, by the product rule."""
    if j.d3 is None:
        raise ValueError("covariant derivative of A needs an order-3 jet")
    X1, X2, X3 = j.d1, j.d2, j.d3
    JX1, JX2 = j_apply(X1), j_apply(X2)
    md = metric(j)
    g, ginv, gamma = md.g, md.ginv, md.gamma
    first_kind = np.einsum("...ija,...ma->...mij", X2, X1)

    dg = np.einsum("...alx,...bx->...abl", X2, X1)
    dg = dg + np.swapaxes(dg, -2, -3)  # [a, b, l]
    dginv = -np.einsum("...ka,...abl,...bm->...kml", ginv, dg, ginv)
    dfirst = np.einsum("...ijla,...ma->...mijl", X3, X1) + np.einsum("...ija,...mla->...mijl", X2, X2)
    dgamma = np.einsum("...kml,...mij->...kijl", dginv, first_kind) + np.einsum(
        "...km,...mijl->...kijl", ginv, dfirst
    )

    h = X2 - np.einsum("...kij,...ka->...ija", gamma, X1)
    dh = (
        X3
        - np.einsum("...kijl,...ka->...ijla", dgamma, X1)
        - np.einsum("...kij,...kla->...ijla", gamma, X2)
    )
    A = np.einsum("...ija,...ka->...ijk", h, JX1)
    dA = np.einsum("...ijla,...ka->...ijkl", dh, JX1) + np.einsum("...ija,...kla->...ijkl", h, JX2)
    nabla_A = dA - _christoffel_contractions(gamma, A)

    H = np.einsum("...ij,...ijk->...k", ginv, A)
    dH_partial = np.einsum("...ijl,...ijk->...kl", dginv, A) + np.einsum("...ij,...ijkl->...kl", ginv, dA)
    dH = dH_partial - np.einsum("...mlk,...m->...kl", gamma, H)
    return DerivativeData(md, CubicTensor(A, g), dA, nabla_A, H, dH, "jet", j.exact)


def _fd_steps(chart: Chart) -> tuple[float, float]:
    return tuple(1e-4 * (hi - lo) for lo, hi in chart.domain.bounds)


def derivative_data_fd(chart: Chart, u, v, jet_method: str = "auto") -> DerivativeData:
    """Covariant derivative of A with ``d_l A`` from a 5-point stencil over the chart."""
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    j0 = jet(chart, u, v, 2, method=jet_method)
    md = metric(j0)
    A0 = cubic_A(j0, check=False)
    H0 = np.einsum("...ij,...ijk->...k", md.ginv, A0.A)
    steps = _fd_steps(chart)
    weights = {-2: 1.0 / 12, -1: -8.0 / 12, 1: 8.0 / 12, 2: -1.0 / 12}
    dA = np.zeros(A0.A.shape + (2,))
    dHp = np.zeros(H0.shape + (2,))
    for l, h in enumerate(steps):
        for off, w in weights.items():
            uu = u + off * h if l == 0 else u
            vv = v + off * h if l == 1 else v
            jj = jet(chart, uu, vv, 2, method=jet_method)
            mm = metric(jj)
            Aj = cubic_A(jj, check=False).A
            dA[..., l] += w * Aj / h
            dHp[..., l] += w * np.einsum("...ij,...ijk->...k", mm.ginv, Aj) / h
    nabla_A = dA - _christoffel_contractions(md.gamma, A0.A)
    dH = dHp - np.einsum("...mlk,...m->...kl", md.gamma, H0)
    return DerivativeData(md, A0, dA, nabla_A, H0, dH, "fd", False)


def covariant_derivative_A(chart: Chart, u, v, method: str = "jet") -> DerivativeData:
    """``A_{ijk,l}`` at chart points.

    ``method="jet"`` differentiates an order-3 jet analytically (exact when
    the chart has exact jets); ``method="fd"`` differences A over neighbours.
    """
    if method == "jet":
        return derivative_data_from_jet(jet(chart, u, v, 3))
    if method == "fd":
        return derivative_data_fd(chart, u, v)
    raise ValueError(f"unknown method {method!r}")


def _scale(dd: DerivativeData) -> np.ndarray:
    # |nabla A| alone vanishes at symmetric points; |A|^2 has the same units
    grad = tensor_norm(dd.nabla_A, dd.metric.g)
    return np.maximum(np.maximum(grad, dd.A.norm() ** 2), NORM_FLOOR)


def codazzi_symmetry_residual(dd: DerivativeData) -> np.ndarray:
    """``max |A_{ijk,l} - A_{ilk,j}|`` relative to ``|nabla A|``."""
    on = to_orthonormal(dd.nabla_A, dd.metric.g)
    swapped = np.swapaxes(on, -1, -3)
    return np.abs(on - swapped).max(axis=(-1, -2, -3, -4)) / _scale(dd)


def codazzi_contraction_residual(dd: DerivativeData) -> np.ndarray:
    """Residual of ``H_{k,l} = g^{ij} A_{ilk,j}`` (normal derivative of H vs divergence of A)."""
    div_A = np.einsum("...ij,...ilkj->...kl", dd.metric.ginv, dd.nabla_A)
    diff = to_orthonormal(dd.dH - div_A, dd.metric.g)
    return np.abs(diff).max(axis=(-1, -2)) / _scale(dd)


@dataclass
class ConformalMaslovResult:
    identity_residual: np.ndarray
    maslov_residual: np.ndarray
    grad_H_symmetric: np.ndarray
    grad_H_antisymmetric: np.ndarray


def conformal_maslov(dd: DerivativeData, n: int = DIM) -> ConformalMaslovResult:
    g, ginv = dd.metric.g, dd.metric.ginv
    dH = dd.dH
    trace = (
        np.einsum("...kl,...ij->...ijkl", dH, g)
        + np.einsum("...il,...jk->...ijkl", dH, g)
        + np.einsum("...jl,...ik->...ijkl", dH, g)
    )
    nabla_abreve = dd.nabla_A - trace / (n + 2)
    adjoint = -np.einsum("...kl,...kijl->...ij", ginv, nabla_abreve)
    div_H = np.einsum("...kl,...kl->...", ginv, dH)
    # [i, j] entry of n * grad(JH) is n * H_{j,i}
    maslov = div_H[..., None, None] * g - n * np.swapaxes(dH, -1, -2)
    scale = _scale(dd)
    identity = tensor_norm((n + 2) * adjoint - maslov, g) / scale
    sym = 0.5 * (dH + np.swapaxes(dH, -1, -2))
    anti = 0.5 * (dH - np.swapaxes(dH, -1, -2))
    return ConformalMaslovResult(
        identity,
        tensor_norm(maslov, g) / scale,
        tensor_norm(sym, g),
        tensor_norm(anti, g),
    )


def conformal_maslov_residual(chart: Chart, u, v, method: str = "jet") -> ConformalMaslovResult:
    return conformal_maslov(covariant_derivative_A(chart, u, v, method))


@dataclass
class CurvatureReport:
    H: np.ndarray
    H_upper: np.ndarray
    minimality_residual: np.ndarray
    abreve_norm: np.ndarray
    abreve_trace_defect: np.ndarray
    symmetry_defect: np.ndarray
    conformal_maslov_residual: np.ndarray
    identity_residual: np.ndarray
    codazzi_residual: np.ndarray
    codazzi_contraction: np.ndarray


def curvature_report(chart: Chart, u, v) -> CurvatureReport:
    j = jet(chart, u, v, 3)
    dd = derivative_data_from_jet(j)
    A = dd.A
    mc = mean_curvature(A, dd.metric, j)
    ab = abreve(A, dd.metric, mc.H_lower)
    a_norm = np.maximum(A.norm(), NORM_FLOOR)
    cm = conformal_maslov(dd)
    return CurvatureReport(
        H=mc.H,
        H_upper=mc.H_upper,
        minimality_residual=mc.minimality_residual,
        abreve_norm=ab.norm() / a_norm,
        abreve_trace_defect=trace_defect(ab, dd.metric) / a_norm,
        symmetry_defect=A.symmetry_defect(),
        conformal_maslov_residual=cm.maslov_residual,
        identity_residual=cm.identity_residual,
        codazzi_residual=codazzi_symmetry_residual(dd),
        codazzi_contraction=codazzi_contraction_residual(dd),
    )
