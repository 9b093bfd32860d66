"""The cubic differential ``A(d_z, d_z, d_z) dz^3`` in isothermal charts.

In an isothermal chart ``z = u + i v`` with ``d_z = (d_u - i d_v) / 2`` the
coefficient expands to

    phi = ((A111 - 3 A122) + i (A222 - 3 A112)) / 8

and it is holomorphic exactly when the surface has conformal Maslov form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .charts import Chart, jet
from .curvature import CubicTensor, cubic_A, derivative_data_from_jet, metric

ISOTHERMAL_TOL = 1e-8
PHI_GATE = 1e-6
CR_STEP = 1e-4


class NotIsothermalError(ValueError):
    """The chart fails the isothermal gate at some sample."""


def _isothermal_from_metric(g: np.ndarray) -> np.ndarray:
    g11, g22, g12 = g[..., 0, 0], g[..., 1, 1], g[..., 0, 1]
    return (np.abs(g11 - g22) + 2.0 * np.abs(g12)) / (g11 + g22)


def isothermal_residual(chart: Chart, u, v) -> np.ndarray:
    return _isothermal_from_metric(metric(jet(chart, u, v, 1)).g)


def polar_isothermal_residual(chart: Chart, r, t) -> np.ndarray:
    """Isothermal residual of ``z = r e^{it}`` for a chart in polar parameters."""
    g = metric(jet(chart, r, t, 1)).g.copy()
    r = np.asarray(r, dtype=float)
    g[..., 0, 1] = g[..., 0, 1] / r
    g[..., 1, 0] = g[..., 1, 0] / r
    g[..., 1, 1] = g[..., 1, 1] / r**2
    return _isothermal_from_metric(g)


def phi_from_components(A: np.ndarray) -> np.ndarray:
    a111 = A[..., 0, 0, 0]
    a112 = A[..., 0, 0, 1]
    a122 = A[..., 0, 1, 1]
    a222 = A[..., 1, 1, 1]
    return ((a111 - 3.0 * a122) + 1j * (a222 - 3.0 * a112)) / 8.0


def phi_coefficient(A: CubicTensor, tol: float = PHI_GATE) -> np.ndarray:
    """``A(d_z, d_z, d_z)``; rejects points where the metric is not conformal."""
    res = _isothermal_from_metric(A.g)
    if np.any(res > tol):
        raise NotIsothermalError(f"isothermal residual {np.max(res):.3e} exceeds {tol:g}")
    return phi_from_components(A.A)


def phi_field(chart: Chart, u, v, tol: float = PHI_GATE) -> np.ndarray:
    return phi_coefficient(cubic_A(jet(chart, u, v, 2)), tol)


@dataclass
class CRResult:
    residual: np.ndarray  # |d phi / d zbar| / (|phi| + floor)
    dzbar: np.ndarray
    phi: np.ndarray
    floor: float
    zero_phi: bool  # phi vanishes identically on the sample (nothing to normalise)
    isothermal: np.ndarray


def _floor(phi: np.ndarray, a_norm_max: float) -> float:
    return max(1e-3 * float(np.max(np.abs(phi), initial=0.0)), 1e-8 * a_norm_max)


def cr_residual(
    chart: Chart,
    u,
    v,
    method: str = "fd",
    step: Optional[float] = None,
    gate: float = ISOTHERMAL_TOL,
) -> CRResult:
    """Normalised Cauchy-Riemann defect of ``phi`` at the given points.

    ``method="fd"`` differences ``phi`` with a 5-point stencil in each chart
    direction; ``method="jet"`` differentiates A analytically from 3-jets.
    """
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    iso = isothermal_residual(chart, u, v)
    if np.any(iso > gate):
        raise NotIsothermalError(f"isothermal residual {np.max(iso):.3e} exceeds {gate:g}")
    if method == "jet":
        dd = derivative_data_from_jet(jet(chart, u, v, 3))
        phi = phi_from_components(dd.A.A)
        d_phi = [phi_from_components(dd.dA[..., l]) for l in range(2)]
        a_norm = dd.A.norm()
    elif method == "fd":
        A0 = cubic_A(jet(chart, u, v, 2))
        phi = phi_from_components(A0.A)
        a_norm = A0.norm()
        d_phi = []
        for axis in range(2):
            lo, hi = chart.domain.bounds[axis]
            h = step if step is not None else CR_STEP * (hi - lo)
            acc = 0.0
            for off, w in ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)):
                uu = u + off * h if axis == 0 else u
                vv = v + off * h if axis == 1 else v
                acc = acc + w * phi_from_components(cubic_A(jet(chart, uu, vv, 2), check=False).A)
            d_phi.append(acc / (12.0 * h))
    else:
        raise ValueError(f"unknown method {method!r}")
    dzbar = 0.5 * (d_phi[0] + 1j * d_phi[1])
    floor = _floor(phi, float(np.max(a_norm, initial=0.0)))
    if floor == 0.0:
        zeros = np.zeros(np.shape(phi))
        return CRResult(zeros, dzbar, phi, 0.0, True, iso)
    return CRResult(np.abs(dzbar) / (np.abs(phi) + floor), dzbar, phi, floor, False, iso)


def mean_value_defect(chart: Chart, center, radii, samples: int = 64) -> np.ndarray:
    """``|mean of phi on the circle - phi(center)|`` for each radius (holomorphic => 0)."""
    cu, cv = center
    t = 2.0 * np.pi * np.arange(samples) / samples
    out = []
    phi0 = phi_field(chart, np.array([cu]), np.array([cv]))[0]
    for rad in np.atleast_1d(radii):
        vals = phi_field(chart, cu + rad * np.cos(t), cv + rad * np.sin(t))
        out.append(abs(np.mean(vals) - phi0))
    return np.array(out)


# -- polar boundary diagnostic ---------------------------------------------------------------


@dataclass
class PolarDiagnostic:
    t: np.ndarray
    r: float
    A_rrr: np.ndarray
    A_rrt: np.ndarray
    A_rtt: np.ndarray
    A_ttt: np.ndarray
    real_part: np.ndarray  # Re(8 z^3 phi)
    imag_part: np.ndarray  # Im(8 z^3 phi)
    unit_real_part: np.ndarray  # same from arc-length normalised components
    unit_imag_part: np.ndarray


def polar_combination(A_rrr, A_rrt, A_rtt, A_ttt, r):
    """``8 z^3 A(d_z, d_z, d_z)`` from polar coordinate components."""
    re = r**3 * (A_rrr - 3.0 * A_rtt / r**2)
    im = r**3 * (-3.0 * A_rrt / r + A_ttt / r**3)
    return re, im


def polar_components_from_cartesian(A: np.ndarray, r, t) -> tuple[np.ndarray, ...]:
    """Polar coordinate components of a cubic tensor given in ``(x, y)`` components."""
    r = np.asarray(r, dtype=float)
    c, s = np.cos(t), np.sin(t)
    e_r = np.stack([c, s], axis=-1)
    e_t = np.stack([-r * s, r * c], axis=-1)

    def contract(a, b, d):
        return np.einsum("...ijk,...i,...j,...k->...", A, a, b, d)

    return contract(e_r, e_r, e_r), contract(e_r, e_r, e_t), contract(e_r, e_t, e_t), contract(e_t, e_t, e_t)


def polar_boundary_diagnostic(chart: Chart, t, r: float = 1.0) -> PolarDiagnostic:
    """Boundary components of A for a chart in polar parameters ``(r, t)``.

    Coordinate-basis values follow the ``d_r, d_t`` basis; the ``unit_*``
    fields use ``d_r / |X_r|`` and ``d_t / |X_t|`` instead.
    """
    if not chart.meta.get("polar"):
        raise ValueError(f"chart {chart.name!r} is not in polar parameters")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    rr = np.full_like(t, r)
    j = jet(chart, rr, t, 2)
    A = cubic_A(j).A
    comps = A[..., 0, 0, 0], A[..., 0, 0, 1], A[..., 0, 1, 1], A[..., 1, 1, 1]
    re, im = polar_combination(*comps, r)
    lr = np.linalg.norm(j.d1[..., 0, :], axis=-1)
    lt = np.linalg.norm(j.d1[..., 1, :], axis=-1)
    unit = comps[0] / lr**3, comps[1] / (lr**2 * lt), comps[2] / (lr * lt**2), comps[3] / lt**3
    ure, uim = polar_combination(*unit, 1.0)
    return PolarDiagnostic(t, r, *comps, re, im, ure, uim)
