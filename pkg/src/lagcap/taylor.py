"""Truncated bivariate Taylor arithmetic.

A :class:`Taylor` holds the coefficients ``c[i, j]`` of ``du^i dv^j`` for a
function of two chart parameters, truncated at total degree ``deg``.  Leading
array axes beyond the first two are batch axes, so a whole parameter grid is
propagated at once.  Closed-form chart formulas written against the ``math``
namespace below therefore yield exact jets (up to rounding) with no
hand-differentiation and no step-size tuning.
"""

from __future__ import annotations

from math import factorial

import numpy as np


class Taylor:
    __slots__ = ("c", "deg")
    __array_ufunc__ = None

    def __init__(self, c: np.ndarray, deg: int):
        self.c = c
        self.deg = deg

    # -- construction ----------------------------------------------------------------

    @classmethod
    def constant(cls, value, deg: int, batch_shape=()) -> "Taylor":
        value = np.broadcast_to(np.asarray(value, dtype=float), batch_shape)
        c = np.zeros((deg + 1, deg + 1) + value.shape)
        c[0, 0] = value
        return cls(c, deg)

    @classmethod
    def variables(cls, u, v, deg: int) -> tuple["Taylor", "Taylor"]:
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        tu = cls.constant(u, deg, u.shape)
        tv = cls.constant(v, deg, v.shape)
        if deg >= 1:
            tu.c[1, 0] = 1.0
            tv.c[0, 1] = 1.0
        return tu, tv

    @property
    def value(self) -> np.ndarray:
        return self.c[0, 0]

    @property
    def batch_shape(self) -> tuple:
        return self.c.shape[2:]

    def derivative(self, i: int, j: int) -> np.ndarray:
        """Partial derivative of order ``(i, j)`` at the expansion point."""
        return self.c[i, j] * (factorial(i) * factorial(j))

    # -- helpers ---------------------------------------------------------------------

    def _mask(self) -> np.ndarray:
        idx = np.add.outer(np.arange(self.deg + 1), np.arange(self.deg + 1))
        return (idx <= self.deg).reshape(idx.shape + (1,) * len(self.batch_shape))

    def _coerce(self, other) -> "Taylor":
        if isinstance(other, Taylor):
            return other
        return Taylor.constant(other, self.deg, np.broadcast_shapes(np.shape(other), self.batch_shape))

    def _mul(self, other: "Taylor") -> "Taylor":
        d = self.deg
        shape = (d + 1, d + 1) + np.broadcast_shapes(self.batch_shape, other.batch_shape)
        out = np.zeros(shape)
        for a in range(d + 1):
            for b in range(d + 1 - a):
                ca = self.c[a, b]
                if not np.any(ca):
                    continue
                out[a:, b:] += ca * other.c[: d + 1 - a, : d + 1 - b]
        out *= self._mask()
        return Taylor(out, d)

    def compose(self, derivs) -> "Taylor":
        """``f(self)`` given ``derivs[k] = f^(k)(value)`` for ``k = 0..deg``."""
        d = self.deg
        delta = Taylor(self.c.copy(), d)
        delta.c[0, 0] = 0.0
        out = Taylor.constant(derivs[0], d, self.batch_shape)
        power = None
        for k in range(1, d + 1):
            power = delta if power is None else power._mul(delta)
            out.c = out.c + power.c * (derivs[k] / factorial(k))
        return out

    # -- arithmetic --------------------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        return Taylor(self.c + other.c, self.deg)

    __radd__ = __add__

    def __neg__(self):
        return Taylor(-self.c, self.deg)

    def __sub__(self, other):
        other = self._coerce(other)
        return Taylor(self.c - other.c, self.deg)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Taylor):
            return Taylor(self.c * np.asarray(other, dtype=float), self.deg)
        return self._mul(other)

    __rmul__ = __mul__

    def reciprocal(self) -> "Taylor":
        return power(self, -1.0)

    def __truediv__(self, other):
        if not isinstance(other, Taylor):
            return Taylor(self.c / np.asarray(other, dtype=float), self.deg)
        return self._mul(other.reciprocal())

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, int) and p >= 0:
            out = Taylor.constant(1.0, self.deg, self.batch_shape)
            for _ in range(p):
                out = out._mul(self)
            return out
        return power(self, float(p))


# -- elementary functions ------------------------------------------------------------


def _is_taylor(x) -> bool:
    return isinstance(x, Taylor)


def exp(x):
    if not _is_taylor(x):
        return np.exp(x)
    e = np.exp(x.value)
    return x.compose([e] * (x.deg + 1))


def sin(x):
    if not _is_taylor(x):
        return np.sin(x)
    s, c = np.sin(x.value), np.cos(x.value)
    cycle = [s, c, -s, -c]
    return x.compose([cycle[k % 4] for k in range(x.deg + 1)])


def cos(x):
    if not _is_taylor(x):
        return np.cos(x)
    s, c = np.sin(x.value), np.cos(x.value)
    cycle = [c, -s, -c, s]
    return x.compose([cycle[k % 4] for k in range(x.deg + 1)])


def power(x, p: float):
    if not _is_taylor(x):
        return np.power(x, p)
    x0 = x.value
    derivs = []
    coef = 1.0
    for k in range(x.deg + 1):
        derivs.append(coef * np.power(x0, p - k))
        coef *= p - k
    return x.compose(derivs)


def sqrt(x):
    return power(x, 0.5) if _is_taylor(x) else np.sqrt(x)


def log(x):
    if not _is_taylor(x):
        return np.log(x)
    x0 = x.value
    derivs = [np.log(x0)]
    for k in range(1, x.deg + 1):
        derivs.append((-1.0) ** (k - 1) * factorial(k - 1) / x0**k)
    return x.compose(derivs)


def atan(x):
    if not _is_taylor(x):
        return np.arctan(x)
    if x.deg > 4:
        raise NotImplementedError("atan jets implemented to degree 4")
    t = x.value
    q = 1.0 + t * t
    derivs = [
        np.arctan(t),
        1.0 / q,
        -2.0 * t / q**2,
        (6.0 * t * t - 2.0) / q**3,
        24.0 * t * (1.0 - t * t) / q**4,
    ]
    return x.compose(derivs[: x.deg + 1])


def primitive_u(integrand: Taylor, value) -> Taylor:
    """Antiderivative in ``u`` of a function of ``u`` alone.

    The value at the expansion point is supplied (typically by quadrature);
    higher coefficients follow from the integrand's series.
    """
    if np.any(integrand.c[:, 1:]):
        raise ValueError("primitive_u needs an integrand independent of v")
    c = np.zeros_like(integrand.c)
    c[0, 0] = value
    for k in range(1, integrand.deg + 1):
        c[k, 0] = integrand.c[k - 1, 0] / k
    return Taylor(c, integrand.deg)


def zeros_like(x):
    if _is_taylor(x):
        return Taylor(np.zeros_like(x.c), x.deg)
    return np.zeros_like(np.asarray(x, dtype=float))


class _Namespace:
    """Math namespace accepted by chart formulas (floats, arrays or Taylor)."""

    exp = staticmethod(exp)
    sin = staticmethod(sin)
    cos = staticmethod(cos)
    sqrt = staticmethod(sqrt)
    log = staticmethod(log)
    atan = staticmethod(atan)
    power = staticmethod(power)
    zeros_like = staticmethod(zeros_like)
    pi = np.pi


math = _Namespace()
