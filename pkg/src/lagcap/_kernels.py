"""Per-triangle energy and gradient assembly for the disk solver.

Two interchangeable implementations: an explicit loop compiled by numba and
a vectorised numpy version.  Both sum triangles in index order, so results
are reproducible run to run; they agree with each other to rounding.
"""

from __future__ import annotations

import numpy as np

from ._backend import USE_NUMBA, njit

DEGENERATE_AREA = 1e-12


@njit(cache=True)
def _triangle_terms_loop(pos, tris, lam):
    n_v = pos.shape[0]
    grad = np.zeros((n_v, 4))
    area_sum = 0.0
    penalty_sum = 0.0
    n_degenerate = 0
    for t in range(tris.shape[0]):
        i0 = tris[t, 0]
        i1 = tris[t, 1]
        i2 = tris[t, 2]
        a0 = pos[i1, 0] - pos[i0, 0]
        a1 = pos[i1, 1] - pos[i0, 1]
        a2 = pos[i1, 2] - pos[i0, 2]
        a3 = pos[i1, 3] - pos[i0, 3]
        b0 = pos[i2, 0] - pos[i0, 0]
        b1 = pos[i2, 1] - pos[i0, 1]
        b2 = pos[i2, 2] - pos[i0, 2]
        b3 = pos[i2, 3] - pos[i0, 3]
        aa = a0 * a0 + a1 * a1 + a2 * a2 + a3 * a3
        bb = b0 * b0 + b1 * b1 + b2 * b2 + b3 * b3
        ab = a0 * b0 + a1 * b1 + a2 * b2 + a3 * b3
        det = aa * bb - ab * ab
        if det < 0.0:
            det = 0.0
        area = 0.5 * np.sqrt(det)
        if area < DEGENERATE_AREA:
            n_degenerate += 1
            continue
        # omega(a, b) = <J a, b> with J(x1, x2, y1, y2) = (-y1, -y2, x1, x2)
        om = a0 * b2 - a2 * b0 + a1 * b3 - a3 * b1
        area_sum += area
        penalty_sum += om * om / (2.0 * area)
        k = 1.0 / (4.0 * area)
        c_area = 1.0 - lam * om * om / (2.0 * area * area)
        c_om = lam * om / area
        # dA/da, dA/db
        ga0 = k * (bb * a0 - ab * b0)
        ga1 = k * (bb * a1 - ab * b1)
        ga2 = k * (bb * a2 - ab * b2)
        ga3 = k * (bb * a3 - ab * b3)
        gb0 = k * (aa * b0 - ab * a0)
        gb1 = k * (aa * b1 - ab * a1)
        gb2 = k * (aa * b2 - ab * a2)
        gb3 = k * (aa * b3 - ab * a3)
        # d omega / da = -J b, d omega / db = J a
        da0 = c_area * ga0 + c_om * b2
        da1 = c_area * ga1 + c_om * b3
        da2 = c_area * ga2 - c_om * b0
        da3 = c_area * ga3 - c_om * b1
        db0 = c_area * gb0 - c_om * a2
        db1 = c_area * gb1 - c_om * a3
        db2 = c_area * gb2 + c_om * a0
        db3 = c_area * gb3 + c_om * a1
        grad[i1, 0] += da0
        grad[i1, 1] += da1
        grad[i1, 2] += da2
        grad[i1, 3] += da3
        grad[i2, 0] += db0
        grad[i2, 1] += db1
        grad[i2, 2] += db2
        grad[i2, 3] += db3
        grad[i0, 0] -= da0 + db0
        grad[i0, 1] -= da1 + db1
        grad[i0, 2] -= da2 + db2
        grad[i0, 3] -= da3 + db3
    return area_sum, penalty_sum, grad, n_degenerate


def _j(v: np.ndarray) -> np.ndarray:
    return np.stack([-v[:, 2], -v[:, 3], v[:, 0], v[:, 1]], axis=1)


def _triangle_terms_numpy(pos, tris, lam):
    a = pos[tris[:, 1]] - pos[tris[:, 0]]
    b = pos[tris[:, 2]] - pos[tris[:, 0]]
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    ab = np.einsum("ij,ij->i", a, b)
    area = 0.5 * np.sqrt(np.maximum(aa * bb - ab * ab, 0.0))
    ok = area >= DEGENERATE_AREA
    safe = np.where(ok, area, 1.0)
    om = np.einsum("ij,ij->i", _j(a), b)
    area_sum = float(np.sum(np.where(ok, area, 0.0)))
    penalty_sum = float(np.sum(np.where(ok, om * om / (2.0 * safe), 0.0)))
    k = (1.0 / (4.0 * safe))[:, None]
    ga = k * (bb[:, None] * a - ab[:, None] * b)
    gb = k * (aa[:, None] * b - ab[:, None] * a)
    c_area = (1.0 - lam * om * om / (2.0 * safe * safe))[:, None]
    c_om = (lam * om / safe)[:, None]
    da = c_area * ga - c_om * _j(b)
    db = c_area * gb + c_om * _j(a)
    da[~ok] = 0.0
    db[~ok] = 0.0
    grad = np.zeros_like(pos)
    np.add.at(grad, tris[:, 1], da)
    np.add.at(grad, tris[:, 2], db)
    np.add.at(grad, tris[:, 0], -(da + db))
    return area_sum, penalty_sum, grad, int(np.count_nonzero(~ok))


def triangle_terms(pos: np.ndarray, tris: np.ndarray, lam: float, backend: str | None = None):
    """``(sum of areas, sum of omega^2 / (2 area), gradient of area + lam * penalty, #degenerate)``."""
    use = USE_NUMBA if backend is None else backend == "numba"
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    tris = np.ascontiguousarray(tris, dtype=np.int64)
    if use:
        return _triangle_terms_loop(pos, tris, float(lam))
    return _triangle_terms_numpy(pos, tris, float(lam))


def triangle_omega_residuals(pos: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """``|omega(a, b)| / |a ^ b|`` per triangle: the Lagrangian defect of its plane."""
    a = pos[tris[:, 1]] - pos[tris[:, 0]]
    b = pos[tris[:, 2]] - pos[tris[:, 0]]
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    ab = np.einsum("ij,ij->i", a, b)
    two_area = np.sqrt(np.maximum(aa * bb - ab * ab, 0.0))
    om = np.abs(np.einsum("ij,ij->i", _j(a), b))
    return om / np.where(two_area > 0, two_area, np.inf)


def triangle_areas(pos: np.ndarray, tris: np.ndarray) -> np.ndarray:
    a = pos[tris[:, 1]] - pos[tris[:, 0]]
    b = pos[tris[:, 2]] - pos[tris[:, 0]]
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    ab = np.einsum("ij,ij->i", a, b)
    return 0.5 * np.sqrt(np.maximum(aa * bb - ab * ab, 0.0))
