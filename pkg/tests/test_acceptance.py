"""The ten acceptance criteria, at their stated tolerances.

Each test records a one-line verdict that is printed in the pytest terminal
summary; running this file directly prints the same lines.
"""

from __future__ import annotations

import sys
import time

import numpy as np
import pytest

from lagcap import boundary as bd
from lagcap.ambient import random_unitary
from lagcap.charts import lagrangian_residual
from lagcap.curvature import conformal_maslov_residual, curvature_report
from lagcap.examples import (
    ExampleError,
    catenoid_in_ball,
    gradient_graph,
    inversion_image_check,
    lagrangian_catenoid,
    perturbed_catenoid,
    plane_disk,
    shifted_plane,
    t_pm,
    t_pm_rootfind,
    whitney,
    whitney_boundary_locus,
    whitney_cap,
    whitney_locus_closed_form,
    whitney_point,
)
from lagcap.hopf import NotIsothermalError, cr_residual, isothermal_residual
from lagcap.solver import SolverConfig, solve

try:
    from conftest import ACCEPTANCE_RESULTS
except ImportError:  # run as a script from elsewhere
    ACCEPTANCE_RESULTS = {}


def record(k: int, checks: dict[str, bool], detail: str = "") -> None:
    """Store the verdict for criterion ``k`` and fail the test listing what broke."""
    ok = all(checks.values())
    failed = [name for name, v in checks.items() if not v]
    ACCEPTANCE_RESULTS[k] = (ok, detail if ok else f"{detail}  failed: {', '.join(failed)}")
    assert ok, f"criterion {k}: failed {failed}; {detail}"


def boundary_frames(spec, samples=100, s=None):
    out = []
    for name in spec.boundary_charts:
        c = spec.charts[name]
        for k in range(len(c.boundaries)):
            ss = bd.boundary_samples(c, samples, k) if s is None else s(c, k)
            out.append((c, k, bd.boundary_frame(c, ss, k, spec.boundary_radius, jet_method="exact")))
    return out


LAGRANGIAN_EXAMPLES = {
    "plane-disk": plane_disk,
    "catenoid": lagrangian_catenoid,
    "catenoid-in-ball": lambda: catenoid_in_ball(2.0),
    "whitney": lambda: whitney(1.0),
    "whitney-cap": lambda: whitney_cap(np.sqrt(3.0)),
    "gradient-graph-quadratic": lambda: gradient_graph("quadratic"),
    "gradient-graph-cubic": lambda: gradient_graph("cubic"),
    "perturbed-catenoid": perturbed_catenoid,
    "shifted-plane": shifted_plane,
}


# 1 -----------------------------------------------------------------------------------------


def test_criterion_01_catenoid_contact_angle():
    t0 = time.perf_counter()
    checks, worst_err, worst_std = {}, 0.0, 0.0
    for r0 in (1.6, 2.0, 3.0):
        spec = catenoid_in_ball(r0)
        expected = np.sqrt(r0**4 - 4.0) / r0**2
        for c, k, fr in boundary_frames(spec):
            err = float(np.max(np.abs(fr.mu_dot_N - expected)))
            std = float(np.std(fr.mu_dot_N))
            worst_err, worst_std = max(worst_err, err), max(worst_std, std)
            checks[f"r0={r0} boundary {k} value"] = err < 1e-6
            checks[f"r0={r0} boundary {k} constant"] = std < 1e-8
        if r0 == 2.0:
            checks["r0=2 equals sqrt(3)/2"] = abs(expected - 0.8660254) < 1e-7
    elapsed = time.perf_counter() - t0
    checks["runtime < 1 s"] = elapsed < 1.0
    record(1, checks, f"max|<mu,N> - expected|={worst_err:.2e} max std={worst_std:.2e} time={elapsed:.2f}s")


# 2 -----------------------------------------------------------------------------------------


def test_criterion_02_t_pm_formula():
    checks, worst = {}, 0.0
    for r0 in (1.5, 1.6, 2.0, 3.0, 10.0):
        lo, hi = t_pm(r0)
        rlo, rhi = t_pm_rootfind(r0)
        d = max(abs(lo - rlo), abs(hi - rhi))
        worst = max(worst, d)
        checks[f"r0={r0} root match"] = d < 1e-12
        checks[f"r0={r0} product"] = abs(lo * hi - 1.0) < 1e-12
        checks[f"r0={r0} squares"] = abs(hi**2 - (r0**2 / 2 + np.sqrt(r0**4 / 4 - 1))) < 1e-12 * r0**2
    for r0 in (1.0, np.sqrt(2.0), 1.4):
        with pytest.raises(ExampleError):
            t_pm(r0)
        with pytest.raises(ExampleError):
            catenoid_in_ball(r0)
        checks[f"r0={r0:.4f} rejected"] = True
    record(2, checks, f"max |closed form - root finder|={worst:.2e}")


# 3 -----------------------------------------------------------------------------------------


def test_criterion_03_lagrangian_legendrian_suite():
    checks, worst_lag = {}, 0.0
    specs = {
        "plane": plane_disk(),
        "catenoid": lagrangian_catenoid(),
        "whitney": whitney(1.0),
        "graph-zero": gradient_graph("zero"),
        "graph-quadratic": gradient_graph("quadratic"),
        "graph-cubic": gradient_graph("cubic"),
    }
    for name, spec in specs.items():
        for cname, c in spec.charts.items():
            _, U, V = spec.sample(40, 40, cname)
            res = float(np.max(lagrangian_residual(c.exact_jet(U, V, 1))))
            worst_lag = max(worst_lag, res)
            checks[f"{name}/{cname} lagrangian"] = res < 1e-10

    rng = np.random.default_rng(2024)
    worst_leg = 0.0
    for name, spec in {"catenoid-in-ball": catenoid_in_ball(2.0), "whitney-cap": whitney_cap(np.sqrt(3.0))}.items():
        frames = boundary_frames(spec, 100)
        rep = bd.legendrian_check([f for _, _, f in frames], 1e-8)
        worst_leg = max(worst_leg, rep.max_legendrian, rep.max_span)
        checks[f"{name} legendrian"] = rep.legendrian_pass
        checks[f"{name} span"] = rep.span_pass

        def random_s(c, k):
            lo, hi = c.domain.bounds[1 - c.boundaries[k].index]
            return rng.uniform(lo, hi, 200)

        rand = [f for _, _, f in boundary_frames(spec, s=random_s)]
        rep = bd.legendrian_check(rand, 1e-8)
        agree = all(np.array_equal(f.legendrian_residual < 1e-8, f.span_residual < 1e-8) for f in rand)
        checks[f"{name} coupled at 200 random points"] = rep.coupled and agree and rep.passed

    # negative control: both residuals fail together
    sp = shifted_plane(0.6)
    c = sp.chart
    fr = bd.boundary_frame(c, rng.uniform(0, 2 * np.pi, 200), 0, 1.0)
    fails_leg = fr.legendrian_residual >= 1e-8
    fails_span = fr.span_residual >= 1e-8
    checks["shifted-plane fails together"] = bool(np.array_equal(fails_leg, fails_span) and fails_leg.any())
    record(3, checks, f"max lagrangian={worst_lag:.2e} max legendrian/span={worst_leg:.2e}")


# 4 -----------------------------------------------------------------------------------------


def test_criterion_04_minimality():
    cat = lagrangian_catenoid()
    c, U, V = cat.sample(50, 50)
    rep = curvature_report(c, U, V)
    cat_max = float(np.max(rep.minimality_residual))
    pl = plane_disk()
    c, U, V = pl.sample(50, 50)
    pr = curvature_report(c, U, V)
    checks = {
        "catenoid |H| relative < 1e-6": cat_max < 1e-6,
        "plane H identically 0": bool(np.all(pr.H == 0.0)),
    }
    record(4, checks, f"catenoid max |H| relative={cat_max:.2e}")


# 5 -----------------------------------------------------------------------------------------


def test_criterion_05_tensor_identities():
    checks = {}
    worst = dict(sym=0.0, trace=0.0, codazzi=0.0, identity=0.0)
    for name, build in LAGRANGIAN_EXAMPLES.items():
        spec = build()
        for cname, c in spec.charts.items():
            _, U, V = spec.sample(20, 20, cname)
            rep = curvature_report(c, U, V)
            vals = dict(
                sym=float(np.max(rep.symmetry_defect)),
                trace=float(np.max(rep.abreve_trace_defect)),
                codazzi=float(np.max(rep.codazzi_residual)),
                identity=float(np.max(rep.identity_residual)),
            )
            for key, v in vals.items():
                worst[key] = max(worst[key], v)
            checks[f"{name}/{cname} symmetry"] = vals["sym"] < 1e-8
            checks[f"{name}/{cname} trace"] = vals["trace"] < 1e-10
            checks[f"{name}/{cname} codazzi"] = vals["codazzi"] < 1e-4
            checks[f"{name}/{cname} identity"] = vals["identity"] < 1e-4
    record(5, checks, " ".join(f"{k}={v:.2e}" for k, v in worst.items()))


# 6 -----------------------------------------------------------------------------------------


def _maslov_and_cr(spec, chart_name, n=30):
    c, U, V = spec.sample(n, n, chart_name)
    m = float(np.max(conformal_maslov_residual(c, U, V).maslov_residual))
    try:
        cr = float(np.max(cr_residual(c, U, V, method="jet").residual))
    except NotIsothermalError:
        cr = None
    return m, cr


def test_criterion_06_maslov_cr_equivalence():
    checks, parts = {}, []
    cat = lagrangian_catenoid()
    m, cr = _maslov_and_cr(cat, "isothermal")
    checks["catenoid maslov"] = m < 1e-4
    checks["catenoid cr"] = cr is not None and cr < 1e-4
    parts.append(f"catenoid m={m:.1e} cr={cr:.1e}")

    wh = whitney(1.0)
    c, U, V = wh.sample(30, 30, "stereo")
    gate = float(np.max(isothermal_residual(c, U, V)))
    checks["whitney stereo chart passes isothermal gate"] = gate < 1e-8
    if gate < 1e-8:
        m, cr = _maslov_and_cr(wh, "stereo")
        cr_fd = float(np.max(cr_residual(c, U, V, method="fd").residual))
        checks["whitney maslov"] = m < 1e-4
        checks["whitney cr (jet)"] = cr is not None and cr < 1e-4
        checks["whitney cr (fd)"] = cr_fd < 1e-4
        parts.append(f"whitney m={m:.1e} cr={cr:.1e} cr_fd={cr_fd:.1e}")

    pc = perturbed_catenoid()
    m, cr = _maslov_and_cr(pc, "isothermal")
    checks["perturbed catenoid maslov > 1e-2"] = m > 1e-2
    checks["perturbed catenoid cr > 1e-2"] = cr is not None and cr > 1e-2
    checks["perturbed catenoid agreement"] = cr is not None and (m < 1e-4) == (cr < 1e-4)
    parts.append(f"perturbed m={m:.1e} cr={cr:.1e}")

    gg = gradient_graph("cubic")
    m, cr = _maslov_and_cr(gg, gg.primary)
    checks["cubic graph maslov > 1e-2"] = m > 1e-2
    # no isothermal chart is available: cr is gated off rather than evaluated
    checks["cubic graph cr gated (chart not isothermal)"] = cr is None
    parts.append(f"cubic m={m:.1e} cr=gated")
    record(6, checks, "; ".join(parts))


# 7 -----------------------------------------------------------------------------------------


def test_criterion_07_joachimsthal():
    checks, worst_lhs, worst_res = {}, 0.0, 0.0
    for name, spec in {"catenoid-in-ball": catenoid_in_ball(2.0), "whitney-cap": whitney_cap(np.sqrt(3.0))}.items():
        for cname in spec.boundary_charts:
            c = spec.charts[cname]
            for k in range(len(c.boundaries)):
                s = bd.boundary_samples(c, 100, k)
                res = bd.joachimsthal_residual(c, s, k, spec.boundary_radius)
                lhs, r = float(np.max(np.abs(res.lhs))), float(np.max(res.residual))
                worst_lhs, worst_res = max(worst_lhs, lhs), max(worst_res, r)
                checks[f"{name}/{cname}[{k}] |A(T,mu,mu)|"] = lhs < 1e-6
                checks[f"{name}/{cname}[{k}] residual"] = r < 1e-4
    record(7, checks, f"max|A(T,mu,mu)|={worst_lhs:.2e} max residual={worst_res:.2e}")


# 8 -----------------------------------------------------------------------------------------


def test_criterion_08_whitney_locus():
    checks, worst = {}, 0.0
    for r in (1.2, np.sqrt(3.0), 3.0):
        phi = whitney_boundary_locus(r)
        cf = whitney_locus_closed_form(r)
        worst = max(worst, abs(phi - cf))
        checks[f"r={r:.4f} locus"] = abs(phi - cf) < 1e-10
        checks[f"r={r:.4f} cos^2"] = abs(np.cos(phi) ** 2 - 2.0 / (r * r + 1.0)) < 1e-10
        t = np.linspace(0, 2 * np.pi, 17)
        pts = np.stack([np.cos(phi) * np.cos(t), np.cos(phi) * np.sin(t), np.full_like(t, np.sin(phi))], -1)
        mod = np.linalg.norm(whitney_point(pts, r), axis=-1)
        checks[f"r={r:.4f} |f|=1 on locus"] = float(np.max(np.abs(mod - 1.0))) < 1e-10
    checks["r=0.9 empty"] = whitney_boundary_locus(0.9) is None
    record(8, checks, f"max |root - closed form|={worst:.2e}")


# 9 -----------------------------------------------------------------------------------------


def test_criterion_09_inversion():
    checks, parts = {}, []
    for r0 in (1.6, 2.0, 3.0):
        rep = inversion_image_check(r0, samples=100)
        checks[f"r0={r0} radius"] = rep.radius_error < 1e-10
        checks[f"r0={r0} lagrangian"] = rep.lagrangian_residual < 1e-8
        checks[f"r0={r0} angle"] = rep.angle_error < 1e-6
        checks[f"r0={r0} legendrian"] = rep.legendrian_residual < 1e-8
        parts.append(
            f"r0={r0}: {rep.radius_error:.0e}/{rep.lagrangian_residual:.0e}/"
            f"{rep.angle_error:.0e}/{rep.legendrian_residual:.0e}"
        )
    record(9, checks, "radius/lag/angle/leg " + " ".join(parts))


# 10 ----------------------------------------------------------------------------------------

THRESHOLDS = {
    "plane_fit_residual": 1e-2,
    "max_omega_residual": 1e-3,
    "max_conormal_deviation": 5e-2,
    "discrete_A_norm": 5e-2,
    "boundary_imag_max": 1e-2,
}


def test_criterion_10_flat_disk_solver():
    cfg = SolverConfig(nr=16, nphi=48, target_theta="free", seed=7, amplitude=0.05)
    res = solve(cfg)
    d = res.diagnostics
    checks = {
        "converged": res.converged,
        "<= 5000 iterations": res.iterations <= 5000,
        "< 60 s": res.wall_time < 60.0,
    }
    for key, tol in THRESHOLDS.items():
        checks[f"{key} < {tol:g}"] = d[key] < tol

    rot = random_unitary(np.random.default_rng(11))
    res_rot = solve(SolverConfig(nr=16, nphi=48, target_theta="free", seed=7, amplitude=0.05), rotation=rot)
    # the listed diagnostics plus energy; layout-dependent extras (minimum triangle area,
    # |mu - N|) depend on in-plane vertex drift, which the flat minimum leaves free
    keys = list(THRESHOLDS) + ["energy"]
    diffs = {k: abs(d[k] - res_rot.diagnostics[k]) for k in keys}
    worst_key = max(diffs, key=diffs.get)
    checks["U(2)-rotated run reproduces diagnostics within 1e-8"] = diffs[worst_key] < 1e-8
    record(
        10,
        checks,
        f"iters={res.iterations} time={res.wall_time:.1f}s "
        + " ".join(f"{k}={d[k]:.1e}" for k in THRESHOLDS)
        + f" max rotation diff={diffs[worst_key]:.1e} ({worst_key})",
    )


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
