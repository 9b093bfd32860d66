"""Ambient geometry of C^2 = R^4 and the contact structure of the unit 3-sphere.

Coordinates are ordered ``(x1, x2, y1, y2)`` and the complex coordinates are
``(x1 + i y1, x2 + i y2)``.  Every function accepts arrays whose trailing axis
has length 4 and broadcasts over leading axes.

Conventions
-----------
* ``J(x1, x2, y1, y2) = (-y1, -y2, x1, x2)``
* ``omega = dx1 ^ dy1 + dx2 ^ dy2`` so that ``omega(u, v) = <J u, v>``
* The Liouville field is ``V = position / 2``; with it ``L_V omega = omega``
  holds exactly and ``alpha = i_V omega`` restricts to a contact form on S^3.
"""

from __future__ import annotations

import numpy as np

#: Matrix of the complex structure acting on column vectors.
J_MATRIX = np.array(
    [
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
    ]
)

#: ``omega(u, v) = u @ OMEGA_MATRIX @ v``
OMEGA_MATRIX = -J_MATRIX

LIOUVILLE_SCALE = 0.5
SPHERE_TOL = 1e-10


class NotOnSphereError(ValueError):
    """A point expected on the unit sphere is not."""


class NotTangentError(ValueError):
    """A vector expected tangent to a sphere is not."""


def as_vector(p) -> np.ndarray:
    """Validate and convert to a float array with trailing dimension 4."""
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1:] != (4,):
        raise ValueError(f"expected trailing dimension 4, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("ambient vectors must be finite")
    return arr


def j_apply(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[..., 0] = -v[..., 2]
    out[..., 1] = -v[..., 3]
    out[..., 2] = v[..., 0]
    out[..., 3] = v[..., 1]
    return out


def inner(u, v) -> np.ndarray:
    return np.sum(np.asarray(u) * np.asarray(v), axis=-1)


def omega(u, v) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return (
        u[..., 0] * v[..., 2]
        - u[..., 2] * v[..., 0]
        + u[..., 1] * v[..., 3]
        - u[..., 3] * v[..., 1]
    )


def unitary_rotation(a: complex, b: complex) -> np.ndarray:
    """Real 4x4 matrix of the SU(2) element ``[[a, -conj(b)], [b, conj(a)]]``.

    ``|a|^2 + |b|^2`` must be 1.  The result is orthogonal and commutes with J.
    """
    a = complex(a)
    b = complex(b)
    if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > 1e-12:
        raise ValueError("|a|^2 + |b|^2 must equal 1")
    m = np.array([[a, -b.conjugate()], [b, a.conjugate()]])
    # complex vector (z1, z2) = (x1 + i y1, x2 + i y2)
    re, im = m.real, m.imag
    out = np.zeros((4, 4))
    out[:2, :2] = re
    out[:2, 2:] = -im
    out[2:, :2] = im
    out[2:, 2:] = re
    return out


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    """A random element of U(2) as a real 4x4 matrix commuting with J."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    su = unitary_rotation(complex(q[0], q[1]), complex(q[2], q[3]))
    phase = rng.uniform(0.0, 2.0 * np.pi)
    c, s = np.cos(phase), np.sin(phase)
    # multiplication by e^{i phase} on both complex coordinates
    rot = c * np.eye(4) + s * J_MATRIX
    return rot @ su


# -- Liouville field and contact geometry -------------------------------------------


def liouville_field(p, scale: float = LIOUVILLE_SCALE) -> np.ndarray:
    return scale * np.asarray(p, dtype=float)


def lie_derivative_omega(scale: float, p=None) -> np.ndarray:
    """Matrix of ``L_V omega`` for ``V = scale * position``.

    ``L_V omega (a, b) = omega(DV a, b) + omega(a, DV b)`` because omega has
    constant coefficients; ``DV = scale * I`` does not depend on ``p``.
    """
    dv = scale * np.eye(4)
    return dv.T @ OMEGA_MATRIX + OMEGA_MATRIX @ dv


def liouville_residual(scale: float, p=None) -> float:
    """Max-norm of ``L_V omega - omega`` on the coordinate 2-planes."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    if p is not None:
        as_vector(p)
    return float(np.max(np.abs(lie_derivative_omega(scale, p) - OMEGA_MATRIX)))


def contact_form_alpha(p, v, tol: float = SPHERE_TOL) -> float:
    p = as_vector(p)
    v = as_vector(v)
    r = np.linalg.norm(p)
    if r == 0:
        raise ValueError("contact form undefined at the origin")
    if abs(np.dot(v, p)) > tol * max(1.0, r * np.linalg.norm(v)):
        raise NotTangentError(f"<v, p> = {np.dot(v, p):.3e} exceeds {tol:g}")
    return float(omega(liouville_field(p), v))


def d_alpha(u, v) -> float:
    """Exterior derivative of alpha; equals omega since ``L_V omega = omega``."""
    return float(omega(u, v))


def _check_unit(p, tol: float = SPHERE_TOL) -> np.ndarray:
    p = as_vector(p)
    if abs(np.linalg.norm(p) - 1.0) > tol:
        raise NotOnSphereError(f"|p| = {np.linalg.norm(p):.15g} is not 1")
    return p


def reeb(p, tol: float = SPHERE_TOL) -> np.ndarray:
    return j_apply(_check_unit(p, tol))


def sphere_tangent_basis(p) -> np.ndarray:
    """Orthonormal basis ``(Jp, q, Jq)`` of the tangent space of S^3 at ``p``.

    ``q`` is the normalized projection of the coordinate axis least aligned
    with ``span{p, Jp}``.
    """
    p = _check_unit(p)
    jp = j_apply(p)
    axes = np.eye(4)
    weights = np.dot(axes, p) ** 2 + np.dot(axes, jp) ** 2
    e = axes[int(np.argmin(weights))]
    q = e - np.dot(e, p) * p - np.dot(e, jp) * jp
    q /= np.linalg.norm(q)
    return np.array([jp, q, j_apply(q)])


def contact_volume(p, basis) -> float:
    """``(d alpha ^ alpha)(b0, b1, b2)`` for three vectors tangent to S^3 at p."""
    p = _check_unit(p)
    b = np.asarray(basis, dtype=float)
    a = [contact_form_alpha(p, b[i], tol=1e-8) for i in range(3)]
    return (
        d_alpha(b[0], b[1]) * a[2]
        - d_alpha(b[0], b[2]) * a[1]
        + d_alpha(b[1], b[2]) * a[0]
    )


def contact_nondegeneracy(p, basis=None) -> float:
    """Value of ``d alpha ^ alpha`` on an orthonormal tangent basis at ``p``.

    The default basis ``(Jp, q, Jq)`` gives 1/2 everywhere on the sphere.
    """
    if basis is None:
        basis = sphere_tangent_basis(p)
    return float(contact_volume(p, basis))


def inversion(p) -> np.ndarray:
    """Inversion in the unit sphere, ``p / |p|^2``."""
    p = np.asarray(p, dtype=float)
    r2 = np.sum(p * p, axis=-1, keepdims=True)
    if np.any(r2 == 0):
        raise ValueError("inversion is undefined at the origin")
    return p / r2


def inversion_differential(p) -> np.ndarray:
    """Jacobian of :func:`inversion` at ``p`` (a scaled reflection)."""
    p = as_vector(p)
    r2 = float(np.dot(p, p))
    if r2 == 0:
        raise ValueError("inversion is undefined at the origin")
    return (np.eye(4) - 2.0 * np.outer(p, p) / r2) / r2
