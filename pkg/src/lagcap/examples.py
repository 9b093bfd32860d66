"""Closed-form surfaces used as oracles and controls.

Every Lagrangian example is written against the Taylor-capable math
namespace, so its jets are exact.  Most of them belong to the rotational
family ``(a(p) cos t, a(p) sin t, b(p) cos t, b(p) sin t)``, which is
Lagrangian for any profile ``(a, b)`` and isothermal exactly when
``a'^2 + b'^2 = a^2 + b^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from . import taylor
from .ambient import J_MATRIX, inversion
from .boundary import boundary_frame, boundary_samples
from .charts import Boundary, Chart, ChartDomain, jet, lagrangian_residual, tangent_frame
from .taylor import Taylor

TWO_PI = 2.0 * np.pi
ANGLE = (0.0, TWO_PI)
POLE_GUARD = 1e-3


class ExampleError(ValueError):
    """Invalid example parameters."""


@dataclass
class ExampleSpec:
    """A named example: its charts, which one is primary, and what it should satisfy."""

    name: str
    params: dict
    charts: dict[str, Chart]
    primary: str
    lagrangian: bool = True
    isothermal_chart: Optional[str] = None
    boundary_charts: tuple[str, ...] = ()
    boundary_radius: float = 1.0
    notes: dict = field(default_factory=dict)

    @property
    def chart(self) -> Chart:
        return self.charts[self.primary]

    def sample(self, n_u: int, n_v: int, chart: Optional[str] = None):
        """``(chart, U, V)`` on the chart's sampling region (singular ends excluded)."""
        c = self.charts[chart or self.primary]
        return (c,) + sample_grid(c, n_u, n_v)

    def rotated(self, matrix: np.ndarray) -> "ExampleSpec":
        charts = {k: c.transformed(matrix) for k, c in self.charts.items()}
        return ExampleSpec(
            self.name,
            dict(self.params),
            charts,
            self.primary,
            self.lagrangian,
            self.isothermal_chart,
            self.boundary_charts,
            self.boundary_radius,
            dict(self.notes),
        )


def sample_grid(chart: Chart, n_u: int, n_v: int):
    """Tensor grid over ``chart.meta['sample_bounds']`` (or the full domain)."""
    bounds = chart.meta.get("sample_bounds", chart.domain.bounds)
    axes = []
    for axis, n in enumerate((n_u, n_v)):
        lo, hi = bounds[axis]
        if chart.domain.periodic[axis]:
            axes.append(lo + (hi - lo) * np.arange(n) / n)
        else:
            axes.append(np.linspace(lo, hi, n))
    return tuple(np.meshgrid(axes[0], axes[1], indexing="ij"))


def rotational_formula(a: Callable, b: Callable):
    """Chart formula for the profile ``p -> (a(p), b(p))`` spun by the angle."""

    def formula(p, t, m):
        ap, bp = a(p, m), b(p, m)
        c, s = m.cos(t), m.sin(t)
        return [ap * c, ap * s, bp * c, bp * s]

    return formula


def _scaled(formula, k: float):
    def f(u, v, m):
        return [c * k for c in formula(u, v, m)]

    return f


# -- plane and controls --------------------------------------------------------------------


def plane_disk() -> ExampleSpec:
    """The equatorial unit disk ``{(x1, x2, 0, 0)}`` in polar and Cartesian charts."""
    polar = Chart(
        ChartDomain("polar-disk", ((0.0, 1.0), ANGLE), (False, True)),
        formula=rotational_formula(lambda r, m: r, lambda r, m: m.zeros_like(r)),
        boundaries=(Boundary(0, 1.0, +1, "r=1"),),
        name="plane-polar",
        meta={"sample_bounds": ((0.05, 1.0), ANGLE), "polar": True},
    )
    half = 1.0 / np.sqrt(2.0)
    cart = Chart(
        ChartDomain("rectangle", ((-1.0, 1.0), (-1.0, 1.0))),
        formula=lambda u, v, m: [u, v, m.zeros_like(u), m.zeros_like(u)],
        isothermal_claimed=True,
        name="plane-cartesian",
        meta={"sample_bounds": ((-half, half), (-half, half))},
    )
    return ExampleSpec(
        "plane-disk",
        {},
        {"polar": polar, "cartesian": cart},
        "polar",
        isothermal_chart="cartesian",
        boundary_charts=("polar",),
        notes={"expected_mu_dot_N": 1.0},
    )


def shifted_plane(offset: float = 0.6) -> ExampleSpec:
    """The Lagrangian plane ``{(x1, x2, c, 0)}`` cut by the unit ball.

    Lagrangian, but its boundary circle is not Legendrian: ``<xi, T> = c sin(t)``.
    """
    if not 0.0 < abs(offset) < 1.0:
        raise ExampleError("offset must lie in (0, 1) in absolute value")
    rho = float(np.sqrt(1.0 - offset**2))

    def formula(r, t, m):
        return [rho * r * m.cos(t), rho * r * m.sin(t), m.zeros_like(r) + offset, m.zeros_like(r)]

    chart = Chart(
        ChartDomain("polar-disk", ((0.0, 1.0), ANGLE), (False, True)),
        formula=formula,
        boundaries=(Boundary(0, 1.0, +1, "r=1"),),
        name="shifted-plane",
        meta={"sample_bounds": ((0.05, 1.0), ANGLE), "polar": True},
    )
    return ExampleSpec("shifted-plane", {"offset": offset}, {"polar": chart}, "polar", boundary_charts=("polar",))


NON_LAGRANGIAN = {
    "linear": lambda u, v, m: [u, v, v, m.zeros_like(u)],
    "curved": lambda u, v, m: [u, v, v + u * v, u * u],
}


def non_lagrangian_control(kind: str = "curved") -> ExampleSpec:
    if kind not in NON_LAGRANGIAN:
        raise ExampleError(f"unknown control {kind!r}; choose from {sorted(NON_LAGRANGIAN)}")
    chart = Chart(
        ChartDomain("rectangle", ((-0.4, 0.4), (-0.4, 0.4))),
        formula=NON_LAGRANGIAN[kind],
        name=f"non-lagrangian-{kind}",
    )
    return ExampleSpec(f"non-lagrangian-{kind}", {"kind": kind}, {"main": chart}, "main", lagrangian=False)


# -- Lagrangian catenoid ---------------------------------------------------------------------


def _catenoid_charts(t_lo, t_hi, scale, sample_t, sample_s, boundaries=True):
    formula = rotational_formula(lambda t, m: t, lambda t, m: 1.0 / t)
    iso = rotational_formula(lambda s, m: m.exp(s), lambda s, m: m.exp(-s))
    if scale != 1.0:
        formula, iso = _scaled(formula, scale), _scaled(iso, scale)
    tb = sb = ()
    if boundaries:
        tb = (Boundary(0, t_lo, -1, "T-"), Boundary(0, t_hi, +1, "T+"))
        sb = (Boundary(0, np.log(t_lo), -1, "T-"), Boundary(0, np.log(t_hi), +1, "T+"))
    annulus = Chart(
        ChartDomain("polar-annulus", ((t_lo, t_hi), ANGLE), (False, True)),
        formula=formula,
        boundaries=tb,
        name="catenoid",
        meta={"sample_bounds": (sample_t, ANGLE)},
    )
    isothermal = Chart(
        ChartDomain("polar-annulus", ((np.log(t_lo), np.log(t_hi)), ANGLE), (False, True)),
        formula=iso,
        isothermal_claimed=True,
        boundaries=sb,
        name="catenoid-isothermal",
        meta={"sample_bounds": (sample_s, ANGLE)},
    )
    return annulus, isothermal


def lagrangian_catenoid(t_min: float = 0.2, t_max: float = 5.0) -> ExampleSpec:
    """``(t cos a, t sin a, cos(a)/t, sin(a)/t)``, plus the isothermal chart ``t = e^s``."""
    if not 0 < t_min < t_max:
        raise ExampleError("need 0 < t_min < t_max")
    lo, hi = np.log(t_min), np.log(t_max)
    pad = 0.05 * (hi - lo)
    annulus, iso = _catenoid_charts(
        t_min, t_max, 1.0, (np.exp(lo + pad), np.exp(hi - pad)), (lo + pad, hi - pad), boundaries=False
    )
    return ExampleSpec(
        "catenoid",
        {"t_min": t_min, "t_max": t_max},
        {"annulus": annulus, "isothermal": iso},
        "annulus",
        isothermal_chart="isothermal",
    )


def catenoid_as_complex_curve(t, a) -> tuple[np.ndarray, np.ndarray]:
    """``(x1 + i x2, y1 - i y2)`` of the catenoid point; equals ``(z, 1/z)`` with ``z = t e^{ia}``."""
    x = lagrangian_catenoid().chart.evaluate(t, a)
    return x[..., 0] + 1j * x[..., 1], x[..., 2] - 1j * x[..., 3]


def t_pm(r0: float) -> tuple[float, float]:
    """Closed-form parameters where the catenoid meets the sphere of radius ``r0``."""
    if not r0 > np.sqrt(2.0):
        raise ExampleError(f"r0 = {r0} must exceed sqrt(2)")
    disc = np.sqrt(r0**4 / 4.0 - 1.0)
    return float(np.sqrt(r0**2 / 2.0 - disc)), float(np.sqrt(r0**2 / 2.0 + disc))


def t_pm_rootfind(r0: float) -> tuple[float, float]:
    """Same as :func:`t_pm` by bracketing roots of ``t^2 + 1/t^2 - r0^2``."""
    if not r0 > np.sqrt(2.0):
        raise ExampleError(f"r0 = {r0} must exceed sqrt(2)")

    def f(t):
        return t * t + 1.0 / (t * t) - r0 * r0

    kw = dict(xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    lo = optimize.brentq(f, 1.0 / (2 * r0), 1.0, **kw)
    hi = optimize.brentq(f, 1.0, 2 * r0, **kw)
    return float(lo), float(hi)


def catenoid_in_ball(r0: float, scaled: bool = True) -> ExampleSpec:
    """Catenoid piece with ``|X| <= r0``; rescaled by ``1/r0`` unless ``scaled=False``."""
    t_lo, t_hi = t_pm(r0)
    scale = 1.0 / r0 if scaled else 1.0
    annulus, iso = _catenoid_charts(t_lo, t_hi, scale, (t_lo, t_hi), (np.log(t_lo), np.log(t_hi)))
    return ExampleSpec(
        "catenoid-in-ball",
        {"r0": r0, "scaled": scaled},
        {"annulus": annulus, "isothermal": iso},
        "annulus",
        isothermal_chart="isothermal",
        boundary_charts=("annulus",),
        boundary_radius=1.0 if scaled else r0,
        notes={"expected_mu_dot_N": np.sqrt(r0**4 - 4.0) / r0**2, "T": (t_lo, t_hi)},
    )


# -- perturbed catenoid (isothermal Lagrangian control) --------------------------------------


def _catenoid_turning(s, m):
    # direction angle of d/ds log(e^s + i e^-s)
    return -2.0 * m.atan(m.exp(-2.0 * s))


def _bump(s, m, width: float, mode: int):
    return m.exp(-(s * s) / (width * width)) * m.cos(mode * s)


def perturbed_catenoid(amplitude: float = 1e-2, mode: int = 3, width: float = 1.0) -> ExampleSpec:
    """Isothermal Lagrangian annulus close to the catenoid but not minimal.

    The profile ``w = a + i b`` is ``exp(L)`` where ``L`` is a unit-speed curve
    whose turning angle is the catenoid's plus ``amplitude * bump``; unit speed
    keeps the chart exactly isothermal and the rotational form keeps it
    Lagrangian, while the bump breaks holomorphy of the cubic differential.
    """
    s_lo, s_hi = -1.5, 1.5
    start = -8.0 * width

    def direction(s, m):
        return _catenoid_turning(s, m) + amplitude * _bump(s, m, width, mode)

    def delta_re(s, m):
        return m.cos(direction(s, m)) - m.cos(_catenoid_turning(s, m))

    def delta_im(s, m):
        return m.sin(direction(s, m)) - m.sin(_catenoid_turning(s, m))

    def quad(fn, s_values):
        flat = np.ravel(s_values)
        uniq, inv = np.unique(flat, return_inverse=True)
        vals = np.array(
            [integrate.quad(lambda x: fn(x, taylor.math), start, x, epsabs=1e-15, epsrel=1e-14, limit=200)[0]
             for x in uniq]
        )
        return vals[inv].reshape(np.shape(s_values))

    def integral(fn, s, m):
        if isinstance(s, Taylor):
            return taylor.primitive_u(fn(s, m), quad(fn, s.value))
        return quad(fn, s)

    def formula(s, t, m):
        # log of the catenoid profile e^s + i e^-s, split into modulus and argument
        log_mod = 0.5 * m.log(m.exp(2.0 * s) + m.exp(-2.0 * s)) + integral(delta_re, s, m)
        arg = m.atan(m.exp(-2.0 * s)) + integral(delta_im, s, m)
        mod = m.exp(log_mod)
        a = mod * m.cos(arg)
        b = mod * m.sin(arg)
        c, sn = m.cos(t), m.sin(t)
        return [a * c, a * sn, b * c, b * sn]

    pad = 0.05 * (s_hi - s_lo)
    chart = Chart(
        ChartDomain("polar-annulus", ((s_lo, s_hi), ANGLE), (False, True)),
        formula=formula,
        isothermal_claimed=True,
        name="perturbed-catenoid",
        meta={"sample_bounds": ((s_lo + pad, s_hi - pad), ANGLE)},
    )
    return ExampleSpec(
        "perturbed-catenoid",
        {"amplitude": amplitude, "mode": mode, "width": width},
        {"isothermal": chart},
        "isothermal",
        isothermal_chart="isothermal",
    )


# -- Whitney spheres -------------------------------------------------------------------------


def _whitney_from_sphere(x1, x2, x3, r, c, m):
    k = r / (1.0 + x3 * x3)
    comps = [k * x1, k * x2, k * x1 * x3, k * x2 * x3]
    return [comp + float(ci) for comp, ci in zip(comps, c)]


def whitney_point(x, r: float = 1.0, c=(0.0, 0.0, 0.0, 0.0)) -> np.ndarray:
    """Image of unit vectors ``x`` in R^3 under the Whitney immersion."""
    x = np.asarray(x, dtype=float)
    return np.stack(_whitney_from_sphere(x[..., 0], x[..., 1], x[..., 2], r, c, taylor.math), axis=-1)


def _band_formula(r, c):
    def f(phi, t, m):
        cp = m.cos(phi)
        return _whitney_from_sphere(cp * m.cos(t), cp * m.sin(t), m.sin(phi), r, c, m)

    return f


def _stereo_formula(r, c, scale=1.0):
    # inverse stereographic projection from the south pole, plane coordinates (X, Y)
    def f(X, Y, m):
        X, Y = X * scale, Y * scale
        q = 1.0 + X * X + Y * Y
        return _whitney_from_sphere(2.0 * X / q, 2.0 * Y / q, (2.0 - q) / q, r, c, m)

    return f


def _polar_stereo_formula(r, rho_max):
    def f(R, t, m):
        rho = R * rho_max
        q = 1.0 + rho * rho
        x3 = (2.0 - q) / q
        k = 2.0 * rho / q
        return _whitney_from_sphere(k * m.cos(t), k * m.sin(t), x3, r, (0, 0, 0, 0), m)

    return f


PHI_MAX = float(np.arcsin(1.0 - POLE_GUARD))


def whitney(r: float = 1.0, c=(0.0, 0.0, 0.0, 0.0)) -> ExampleSpec:
    """Whitney sphere ``x -> r/(1+x3^2) (x1, x2, x1 x3, x2 x3) + c`` in band and stereographic charts."""
    if not r > 0:
        raise ExampleError("r must be positive")
    c = tuple(float(ci) for ci in c)
    band = Chart(
        ChartDomain("sphere-band", ((-PHI_MAX, PHI_MAX), ANGLE), (False, True)),
        formula=_band_formula(r, c),
        name="whitney-band",
    )
    stereo = Chart(
        ChartDomain("rectangle", ((-2.0, 2.0), (-2.0, 2.0))),
        formula=_stereo_formula(r, c),
        isothermal_claimed=True,
        name="whitney-stereographic",
        meta={"sample_bounds": ((-1.5, 1.5), (-1.5, 1.5))},
    )
    return ExampleSpec(
        "whitney", {"r": r, "c": c}, {"band": band, "stereo": stereo}, "band", isothermal_chart="stereo"
    )


def whitney_boundary_locus(r: float) -> Optional[float]:
    """Latitude ``phi* > 0`` where the Whitney sphere crosses the unit sphere, or None."""

    def excess(phi):
        s = np.sin(phi)
        return r * r * np.cos(phi) ** 2 / (1.0 + s * s) - 1.0

    if excess(0.0) <= 0.0:
        return None
    return float(optimize.brentq(excess, 0.0, np.pi / 2, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))


def whitney_locus_closed_form(r: float) -> float:
    return float(np.arccos(np.sqrt(2.0 / (r * r + 1.0))))


def whitney_cap(r: float) -> ExampleSpec:
    """The two disks of a Whitney sphere inside the closed unit ball (``r > 1``)."""
    if not r > 1.0:
        raise ExampleError(f"r = {r} must exceed 1 for the sphere to cross the unit sphere")
    phi_star = whitney_boundary_locus(r)
    form = _band_formula(r, (0.0, 0.0, 0.0, 0.0))
    north = Chart(
        ChartDomain("sphere-band", ((phi_star, PHI_MAX), ANGLE), (False, True)),
        formula=form,
        boundaries=(Boundary(0, phi_star, -1, "north"),),
        name="whitney-cap-north",
    )
    south = Chart(
        ChartDomain("sphere-band", ((-PHI_MAX, -phi_star), ANGLE), (False, True)),
        formula=form,
        boundaries=(Boundary(0, -phi_star, +1, "south"),),
        name="whitney-cap-south",
    )
    s = np.sin(phi_star)
    rho_max = float(np.sqrt((1.0 - s) / (1.0 + s)))
    disk = Chart(
        ChartDomain("polar-disk", ((0.0, 1.0), ANGLE), (False, True)),
        formula=_polar_stereo_formula(r, rho_max),
        boundaries=(Boundary(0, 1.0, +1, "r=1"),),
        name="whitney-cap-disk",
        meta={"sample_bounds": ((0.05, 1.0), ANGLE), "polar": True},
    )
    stereo = Chart(
        ChartDomain("rectangle", ((-1.0, 1.0), (-1.0, 1.0))),
        formula=_stereo_formula(r, (0.0, 0.0, 0.0, 0.0), scale=rho_max),
        isothermal_claimed=True,
        name="whitney-cap-stereographic",
        meta={"sample_bounds": ((-0.7, 0.7), (-0.7, 0.7))},
    )
    return ExampleSpec(
        "whitney-cap",
        {"r": r},
        {"north": north, "south": south, "disk": disk, "stereo": stereo},
        "north",
        isothermal_chart="stereo",
        boundary_charts=("north", "south", "disk"),
        notes={
            "phi_star": phi_star,
            "rho_max": rho_max,
            "expected_abs_mu_dot_N": float(np.sqrt(r**4 - 1.0) / r**2),
        },
    )


# -- gradient graphs -------------------------------------------------------------------------

GRAPH_FUNCTIONS: dict[str, tuple[Callable, Callable, Callable]] = {}


def register_graph_function(name: str, w: Callable, w_u: Callable, w_v: Callable) -> None:
    """Register ``w`` and its first partials, each a function of ``(u, v, m)``."""
    GRAPH_FUNCTIONS[name] = (w, w_u, w_v)


register_graph_function(
    "zero",
    lambda u, v, m: m.zeros_like(u),
    lambda u, v, m: m.zeros_like(u),
    lambda u, v, m: m.zeros_like(u),
)
register_graph_function(
    "quadratic",
    lambda u, v, m: 0.5 * (u * u + v * v),
    lambda u, v, m: u + m.zeros_like(v),
    lambda u, v, m: v + m.zeros_like(u),
)
register_graph_function(
    "cubic",
    lambda u, v, m: u * u * u + v * v * v,
    lambda u, v, m: 3.0 * u * u + m.zeros_like(v),
    lambda u, v, m: 3.0 * v * v + m.zeros_like(u),
)


def gradient_graph(w: str = "cubic", half_width: float = 1.0) -> ExampleSpec:
    """Graph of the gradient of ``w``: ``(u, v, w_u, w_v)``, always Lagrangian."""
    if w not in GRAPH_FUNCTIONS:
        raise ExampleError(f"unknown graph function {w!r}; registered: {sorted(GRAPH_FUNCTIONS)}")
    _, wu, wv = GRAPH_FUNCTIONS[w]
    chart = Chart(
        ChartDomain("rectangle", ((-half_width, half_width), (-half_width, half_width))),
        formula=lambda u, v, m: [u + m.zeros_like(v), v + m.zeros_like(u), wu(u, v, m), wv(u, v, m)],
        name=f"gradient-graph-{w}",
    )
    return ExampleSpec("gradient-graph", {"w": w, "half_width": half_width}, {"graph": chart}, "graph")


# -- generic normal perturbations ------------------------------------------------------------


def _smooth_field(rng: np.random.Generator, modes: int):
    """Random smooth map R^4 -> R^4 given as a sum of plane waves."""
    freq = rng.normal(size=(modes, 4)) * 1.5
    phase = rng.uniform(0, TWO_PI, size=modes)
    amp = rng.normal(size=(modes, 4))
    amp /= np.sqrt(modes) * np.max(np.abs(amp))

    def field(x):
        arg = x @ freq.T + phase
        return np.sin(arg) @ amp

    return field


def perturb(
    spec: ExampleSpec,
    amplitude: float,
    mode: int = 3,
    seed: int = 0,
    pin_boundary: bool = False,
    chart: Optional[str] = None,
) -> ExampleSpec:
    """Displace a Lagrangian example along its normal plane ``J(T)`` by a smooth random field.

    With ``pin_boundary`` every point keeps its distance from the origin, so a
    boundary on a sphere stays there.  The result has finite-difference jets only.
    """
    if amplitude == 0.0:
        return spec
    if mode < 1:
        raise ExampleError("mode must be a positive integer")
    key = chart or spec.primary
    base = spec.charts[key]
    field_fn = _smooth_field(np.random.default_rng(seed), mode)

    def evaluator(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        j = jet(base, u, v, 1)
        x = j.x
        d1 = j.d1
        # polar centres have X_t = 0; take the frame a hair away from them
        bad = np.linalg.norm(d1[..., 1, :], axis=-1) < 1e-9 * (1 + np.linalg.norm(d1[..., 0, :], axis=-1))
        if np.any(bad):
            lo, hi = base.domain.bounds[0]
            nudge = 1e-7 * (hi - lo)
            d1 = d1.copy()
            d1[bad] = jet(base, u[bad] + nudge, v[bad], 1).d1
        fr = tangent_frame(type(j)(x, d1))
        f = field_fn(x)
        n1 = np.sum(f * fr.n1, axis=-1, keepdims=True)
        n2 = np.sum(f * fr.n2, axis=-1, keepdims=True)
        y = x + amplitude * (n1 * fr.n1 + n2 * fr.n2)
        if pin_boundary:
            rx = np.linalg.norm(x, axis=-1, keepdims=True)
            ry = np.linalg.norm(y, axis=-1, keepdims=True)
            y = np.where(ry > 0, y * rx / np.where(ry > 0, ry, 1.0), y)
        return y

    new = Chart(
        base.domain,
        evaluator=evaluator,
        boundaries=base.boundaries,
        name=f"{base.name}-perturbed",
        meta=dict(base.meta),
    )
    # check that the perturbation is still an immersion on the sampling grid
    U, V = sample_grid(new, 12, 12)
    jet(new, U, V, 1, method="fd")
    return ExampleSpec(
        f"{spec.name}-perturbed",
        {**spec.params, "amplitude": amplitude, "mode": mode, "seed": seed, "pin_boundary": pin_boundary},
        {key: new},
        key,
        lagrangian=False,
        boundary_charts=tuple(k for k in spec.boundary_charts if k == key),
        boundary_radius=spec.boundary_radius,
    )


# -- inversion -------------------------------------------------------------------------------


@dataclass
class InversionReport:
    r0: float
    radius_error: float
    lagrangian_residual: float
    angle_error: float
    legendrian_residual: float
    original_angles: np.ndarray
    image_angles: np.ndarray

    def passed(self, radius_tol=1e-10, lag_tol=1e-8, angle_tol=1e-6, leg_tol=1e-8) -> bool:
        return (
            self.radius_error < radius_tol
            and self.lagrangian_residual < lag_tol
            and self.angle_error < angle_tol
            and self.legendrian_residual < leg_tol
        )


def inverted_chart(chart: Chart) -> Chart:
    """``inversion o chart`` as a numeric chart (finite-difference jets)."""
    return Chart(
        chart.domain,
        evaluator=lambda u, v: inversion(chart.evaluate(u, v)),
        boundaries=chart.boundaries,
        name=f"{chart.name}-inverted",
        meta=dict(chart.meta),
    )


def _line_angle(fr) -> np.ndarray:
    # angle between the conormal line and the sphere-normal line, in [0, pi/2]
    return np.arccos(np.clip(np.abs(fr.mu_dot_N), 0.0, 1.0))


def inversion_image_check(r0: float, samples: int = 100, seed: int = 0) -> InversionReport:
    """Invert the unscaled catenoid piece of radius ``r0`` in the unit sphere and check what survives."""
    spec = catenoid_in_ball(r0, scaled=False)
    base = spec.chart
    image = inverted_chart(base)
    rng = np.random.default_rng(seed)
    radius_err = lag = angle_err = leg = 0.0
    orig_angles, img_angles = [], []
    for k, b in enumerate(base.boundaries):
        s = boundary_samples(base, samples, k)
        u, v = b.params(s)
        q = image.evaluate(u, v)
        radius_err = max(radius_err, float(np.max(np.abs(np.linalg.norm(q, axis=-1) - 1.0 / r0))))
        f0 = boundary_frame(base, s, k, radius=r0, jet_method="exact")
        f1 = boundary_frame(image, s, k, radius=1.0 / r0, jet_method="fd")
        a0, a1 = _line_angle(f0), _line_angle(f1)
        orig_angles.append(a0)
        img_angles.append(a1)
        angle_err = max(angle_err, float(np.max(np.abs(a0 - a1))))
        leg = max(leg, float(np.max(f1.legendrian_residual)))
    (tlo, thi), (alo, ahi) = image.domain.bounds
    m = max(samples, 1)
    tu = rng.uniform(tlo + 0.01 * (thi - tlo), thi - 0.01 * (thi - tlo), size=m)
    tv = rng.uniform(alo, ahi, size=m)
    lag = float(np.max(lagrangian_residual(jet(image, tu, tv, 1, method="fd"))))
    return InversionReport(
        r0, radius_err, lag, angle_err, leg, np.concatenate(orig_angles), np.concatenate(img_angles)
    )


def inversion_whitney_match(r0: float, samples: int = 200, seed: int = 0) -> float:
    """Distance from ``e^{-i pi/4} r0 * inversion(catenoid piece)`` to the Whitney sphere of radius ``r0/sqrt 2``.

    Exploratory: the identification is a worked-out guess checked numerically.
    """
    rng = np.random.default_rng(seed)
    base = catenoid_in_ball(r0, scaled=False).chart
    (tlo, thi), (alo, ahi) = base.domain.bounds
    t = rng.uniform(tlo, thi, samples)
    a = rng.uniform(alo, ahi, samples)
    q = r0 * inversion(base.evaluate(t, a))
    q = q @ complex_phase(-0.25 * np.pi).T
    # recover the sphere point: x3 from b/a, then (x1, x2) from the angle
    r = r0 / np.sqrt(2.0)
    za = q[:, 0] + 1j * q[:, 1]
    zb = q[:, 2] + 1j * q[:, 3]
    x3 = np.real(zb / za)
    cphi = np.sqrt(np.clip(1.0 - x3 * x3, 0.0, 1.0))
    ang = np.angle(za)
    x = np.stack([cphi * np.cos(ang), cphi * np.sin(ang), x3], axis=-1)
    return float(np.max(np.linalg.norm(whitney_point(x, r) - q, axis=-1)))


def complex_phase(angle: float) -> np.ndarray:
    """Multiplication of both complex coordinates by ``e^{i angle}``."""
    return np.cos(angle) * np.eye(4) + np.sin(angle) * J_MATRIX


# -- registry used by the CLI ----------------------------------------------------------------


def build_example(name: str, **params) -> ExampleSpec:
    """Construct an example by its CLI name; unknown keyword parameters are ignored."""
    p = {k: v for k, v in params.items() if v is not None}
    if name == "plane-disk":
        return plane_disk()
    if name == "catenoid":
        return lagrangian_catenoid()
    if name == "catenoid-in-ball":
        return catenoid_in_ball(float(p.get("r0", 2.0)))
    if name == "whitney":
        return whitney(float(p.get("r", 1.0)))
    if name == "whitney-cap":
        return whitney_cap(float(p.get("r", np.sqrt(3.0))))
    if name == "gradient-graph":
        return gradient_graph(p.get("w", "cubic"))
    if name == "perturbed-catenoid":
        return perturbed_catenoid(float(p.get("amplitude", 1e-2)))
    if name == "shifted-plane":
        return shifted_plane(float(p.get("offset", 0.6)))
    raise ExampleError(f"unknown example {name!r}")


EXAMPLE_NAMES = (
    "plane-disk",
    "catenoid",
    "catenoid-in-ball",
    "whitney",
    "whitney-cap",
    "gradient-graph",
    "perturbed-catenoid",
    "shifted-plane",
)
