"""``lagcap`` command line: verify examples, run the disk solver, export samples.

Exit codes: 0 success, 1 a check failed (or flatness thresholds missed),
2 usage or precondition error, 3 numerical failure, 4 solver did not converge.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import metadata
from typing import Callable, Optional

import numpy as np

from . import boundary as bd
from .ambient import random_unitary
from .charts import DegenerateJetError, DomainError, jet, lagrangian_residual
from .curvature import (
    NotLagrangianError,
    codazzi_symmetry_residual,
    derivative_data_from_jet,
    conformal_maslov,
    curvature_report,
)
from .examples import EXAMPLE_NAMES, ExampleError, ExampleSpec, build_example, inversion_image_check
from .hopf import NotIsothermalError, cr_residual
from .solver import (
    MeshError,
    SolverConfig,
    TopologyError,
    build_mesh,
    initial_mesh,
    read_mesh_csv,
    solve,
    write_mesh_csv,
    write_mesh_obj,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC, EXIT_NOCONV = 0, 1, 2, 3, 4

DEFAULT_TOLERANCES = {
    "lagrangian": 1e-10,
    "legendrian": 1e-8,
    "angle": 1e-6,
    "capillary": 1e-8,
    "minimal": 1e-6,
    "abreve": 1e-6,
    "maslov": 1e-4,
    "codazzi": 1e-4,
    "joachimsthal": 1e-4,
    "cr": 1e-4,
    "inversion": 1e-8,
}
CHECK_NAMES = tuple(DEFAULT_TOLERANCES)

# thresholds a free-angle solve must meet to count as flat
FLATNESS_THRESHOLDS = {
    "plane_fit_residual": 1e-2,
    "max_omega_residual": 1e-3,
    "max_conormal_deviation": 5e-2,
    "discrete_A_norm": 5e-2,
    "boundary_imag_max": 1e-2,
}

NUMERICAL_ERRORS = (FloatingPointError, np.linalg.LinAlgError, DegenerateJetError, bd.OffSphereError, DomainError)


class UsageError(Exception):
    pass


def artifact_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # running from a source tree
        from . import __version__

        return __version__


# -- JSON ------------------------------------------------------------------------------------


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    # float repr is the shortest string that round-trips exactly
    return json.dumps(_clean(obj), indent=2, sort_keys=False) + "\n"


def write_json(obj, path: Optional[str]) -> None:
    text = dumps(obj)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# -- verification ----------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    max_residual: float
    mean_residual: float
    tolerance: float
    passed: bool
    note: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }
        if self.note:
            d["note"] = self.note
        if self.extra:
            d["extra"] = self.extra
        return d


def _result(name: str, values, tol: float, **extra) -> CheckResult:
    vals = np.abs(np.concatenate([np.ravel(np.asarray(v, dtype=float)) for v in values]))
    mx, mean = float(np.max(vals)), float(np.mean(vals))
    return CheckResult(name, mx, mean, tol, bool(np.isfinite(mx) and mx < tol), extra=extra)


def _failed(name: str, tol: float, why: str) -> CheckResult:
    return CheckResult(name, math.inf, math.inf, tol, False, note=why)


@dataclass
class VerifyContext:
    spec: ExampleSpec
    n_u: int
    n_v: int
    boundary_samples: int
    chart: Optional[str] = None

    def grid(self, chart: Optional[str] = None):
        return self.spec.sample(self.n_u, self.n_v, chart or self.chart)

    def boundaries(self):
        """``(chart, boundary index)`` pairs for every designated boundary curve."""
        if not self.spec.boundary_charts:
            raise UsageError(f"example {self.spec.name!r} has no boundary on a sphere")
        for name in self.spec.boundary_charts:
            c = self.spec.charts[name]
            for k in range(len(c.boundaries)):
                yield c, k

    def frames(self):
        for c, k in self.boundaries():
            s = bd.boundary_samples(c, self.boundary_samples, k)
            yield c, k, bd.boundary_frame(c, s, k, self.spec.boundary_radius)


def check_lagrangian(ctx: VerifyContext, tol: float) -> CheckResult:
    names = [ctx.chart] if ctx.chart else list(ctx.spec.charts)
    vals = []
    for name in names:
        c, U, V = ctx.grid(name)
        vals.append(lagrangian_residual(jet(c, U, V, 1)))
    return _result("lagrangian", vals, tol)


def check_legendrian(ctx: VerifyContext, tol: float) -> CheckResult:
    frames = [f for _, _, f in ctx.frames()]
    rep = bd.legendrian_check(frames, tol)
    vals = [np.maximum(f.legendrian_residual, f.span_residual) for f in frames]
    return _result(
        "legendrian", vals, tol, max_legendrian=rep.max_legendrian, max_span=rep.max_span, coupled=rep.coupled
    )


def check_angle(ctx: VerifyContext, tol: float) -> CheckResult:
    notes = ctx.spec.notes
    if "expected_mu_dot_N" in notes:
        expected, signed = float(notes["expected_mu_dot_N"]), True
    elif "expected_abs_mu_dot_N" in notes:
        expected, signed = float(notes["expected_abs_mu_dot_N"]), False
    else:
        raise UsageError(f"example {ctx.spec.name!r} has no reference contact angle")
    vals = []
    for _, _, f in ctx.frames():
        got = f.mu_dot_N if signed else np.abs(f.mu_dot_N)
        vals.append(got - expected)
    return _result("angle", vals, tol, expected_mu_dot_N=expected, signed=signed)


def check_capillary(ctx: VerifyContext, tol: float) -> CheckResult:
    spreads, stds = [], []
    for c, k in ctx.boundaries():
        try:
            prof = bd.contact_angle_profile(c, ctx.boundary_samples, k, ctx.spec.boundary_radius, tol)
        except bd.OffSphereError:
            raise
        except ValueError as exc:
            return _failed("capillary", tol, str(exc))
        spreads.append(prof.spread)
        stds.append(prof.std)
    return _result("capillary", [spreads], tol, std=max(stds))


def _report(ctx: VerifyContext):
    c, U, V = ctx.grid()
    return curvature_report(c, U, V)


def check_minimal(ctx: VerifyContext, tol: float) -> CheckResult:
    return _result("minimal", [_report(ctx).minimality_residual], tol)


def check_abreve(ctx: VerifyContext, tol: float) -> CheckResult:
    return _result("abreve", [_report(ctx).abreve_norm], tol)


def check_maslov(ctx: VerifyContext, tol: float) -> CheckResult:
    c, U, V = ctx.grid()
    cm = conformal_maslov(derivative_data_from_jet(jet(c, U, V, 3)))
    return _result("maslov", [cm.maslov_residual], tol)


def check_codazzi(ctx: VerifyContext, tol: float) -> CheckResult:
    c, U, V = ctx.grid()
    return _result("codazzi", [codazzi_symmetry_residual(derivative_data_from_jet(jet(c, U, V, 3)))], tol)


def check_joachimsthal(ctx: VerifyContext, tol: float) -> CheckResult:
    vals, lhs = [], []
    for c, k in ctx.boundaries():
        s = bd.boundary_samples(c, ctx.boundary_samples, k)
        res = bd.joachimsthal_residual(c, s, k, ctx.spec.boundary_radius)
        vals.append(res.residual)
        lhs.append(res.lhs)
    out = _result("joachimsthal", vals, tol)
    out.extra["max_abs_A_T_mu_mu"] = float(np.max(np.abs(np.concatenate(lhs))))
    return out


def check_cr(ctx: VerifyContext, tol: float) -> CheckResult:
    name = ctx.chart or ctx.spec.isothermal_chart
    if name is None:
        return _failed("cr", tol, f"example {ctx.spec.name!r} has no isothermal chart")
    c, U, V = ctx.grid(name)
    try:
        # analytic derivative of phi when the chart has exact jets; differences stay inside the domain otherwise
        res = cr_residual(c, U, V, method="jet" if c.formula is not None else "fd")
    except NotIsothermalError as exc:
        return _failed("cr", tol, str(exc))
    return _result("cr", [res.residual], tol, zero_phi=res.zero_phi, chart=name)


def check_inversion(ctx: VerifyContext, tol: float) -> CheckResult:
    if ctx.spec.name != "catenoid-in-ball":
        raise UsageError("the inversion check applies to catenoid-in-ball only")
    rep = inversion_image_check(float(ctx.spec.params["r0"]), samples=ctx.boundary_samples)
    parts = {
        "radius_error": rep.radius_error,
        "lagrangian_residual": rep.lagrangian_residual,
        "angle_error": rep.angle_error,
        "legendrian_residual": rep.legendrian_residual,
    }
    out = _result("inversion", [list(parts.values())], tol, **parts)
    out.passed = bool(rep.passed(radius_tol=min(tol, 1e-10), lag_tol=tol, angle_tol=max(tol, 1e-6), leg_tol=tol))
    return out


CHECKS: dict[str, Callable[[VerifyContext, float], CheckResult]] = {
    "lagrangian": check_lagrangian,
    "legendrian": check_legendrian,
    "angle": check_angle,
    "capillary": check_capillary,
    "minimal": check_minimal,
    "abreve": check_abreve,
    "maslov": check_maslov,
    "codazzi": check_codazzi,
    "joachimsthal": check_joachimsthal,
    "cr": check_cr,
    "inversion": check_inversion,
}


def _example_params(args) -> dict:
    return {k: getattr(args, k, None) for k in ("r0", "r", "w", "amplitude", "offset")}


def _build(args) -> ExampleSpec:
    if args.example not in EXAMPLE_NAMES:
        raise UsageError(f"unknown example {args.example!r}; choose from {', '.join(EXAMPLE_NAMES)}")
    try:
        spec = build_example(args.example, **_example_params(args))
    except ExampleError as exc:
        raise UsageError(str(exc)) from exc
    if args.chart is not None and args.chart not in spec.charts:
        raise UsageError(f"example {spec.name!r} has no chart {args.chart!r}; charts: {', '.join(spec.charts)}")
    return spec


def cmd_verify(args) -> int:
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = [c for c in checks if c not in CHECKS]
    if unknown or not checks:
        raise UsageError(f"unknown check(s) {unknown}; choose from {', '.join(CHECK_NAMES)}")
    spec = _build(args)
    n_u, n_v = args.grid
    if n_u < 2 or n_v < 2:
        raise UsageError("grid sizes must be at least 2")
    ctx = VerifyContext(spec, n_u, n_v, args.boundary_samples, args.chart)
    report = {
        "artifact_version": artifact_version(),
        "example": {"name": spec.name, "params": spec.params},
        "grid": {"n_u": n_u, "n_v": n_v},
        "checks": [],
        "overall_pass": False,
    }
    code = EXIT_OK
    for name in checks:
        tol = args.tol if args.tol is not None else DEFAULT_TOLERANCES[name]
        try:
            res = CHECKS[name](ctx, tol)
            if math.isnan(res.max_residual):
                raise FloatingPointError(f"{name} residual is NaN")
        except (NotLagrangianError, NotIsothermalError) as exc:
            res = _failed(name, tol, str(exc))
        except NUMERICAL_ERRORS as exc:
            report["error"] = {"check": name, "message": f"{type(exc).__name__}: {exc}"}
            code = EXIT_NUMERIC
            break
        report["checks"].append(res.to_dict())
        if not args.quiet:
            flag = "PASS" if res.passed else "FAIL"
            print(f"{flag} {name:13s} max={res.max_residual:.3e} mean={res.mean_residual:.3e} tol={tol:g}")
    report["overall_pass"] = code == EXIT_OK and all(c["pass"] for c in report["checks"])
    write_json(report, args.out)
    if code != EXIT_OK:
        print(f"numerical failure: {report['error']['message']}", file=sys.stderr)
        return code
    return EXIT_OK if report["overall_pass"] else EXIT_FAIL


# -- solver ----------------------------------------------------------------------------------


def _theta(text: str):
    if text == "free":
        return "free"
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--theta takes 'free' or an angle in radians, got {text!r}") from exc


def _schedule(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad lambda schedule {text!r}") from exc


def solver_config(args) -> SolverConfig:
    return SolverConfig(
        nr=args.nr,
        nphi=args.nphi,
        lambda_omega=args.lambda_omega,
        lambda_theta=args.lambda_theta,
        target_theta=args.theta,
        max_iters=args.max_iters,
        grad_tol=args.grad_tol,
        step_rule=args.step_rule,
        seed=args.seed,
        amplitude=args.amplitude,
        topology=args.topology,
        symmetric=not args.no_symmetry,
    )


def flatness_checks(diag: dict) -> dict:
    return {k: bool(diag[k] < v) for k, v in FLATNESS_THRESHOLDS.items()}


def cmd_solve(args) -> int:
    cfg = solver_config(args)
    try:
        cfg.validate()
        rotation = random_unitary(np.random.default_rng(args.rotate_seed)) if args.rotate_seed is not None else None
        if args.init_file:
            mesh = read_mesh_csv(args.init_file)
            if (mesh.nr, mesh.nphi) != (cfg.nr, cfg.nphi):
                cfg.nr, cfg.nphi = mesh.nr, mesh.nphi
            if rotation is not None:
                mesh = mesh.copy_with(mesh.positions @ rotation.T)
        else:
            mesh = initial_mesh(cfg, rotation)
    except (MeshError, TopologyError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    try:
        result = solve(cfg, mesh=mesh)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out = result.to_dict()
    out["artifact_version"] = artifact_version()
    out["flatness"] = flatness_checks(result.diagnostics) if cfg.free else {}
    flat = all(out["flatness"].values())
    out["flat"] = flat if cfg.free else None
    write_json(out, args.out_prefix + ".json")
    write_mesh_csv(result.mesh, args.out_prefix + "_mesh.csv")
    write_mesh_obj(result.mesh, args.out_prefix + ".obj")
    d = result.diagnostics
    if not args.quiet:
        print(
            f"converged={result.converged} iterations={result.iterations} energy={d['energy']:.12g} "
            f"plane_fit={d['plane_fit_residual']:.3e} omega={d['max_omega_residual']:.3e} "
            f"conormal={d['max_conormal_deviation']:.3e} A={d['discrete_A_norm']:.3e} "
            f"imag={d['boundary_imag_max']:.3e} time={result.wall_time:.2f}s"
        )
    if not all(np.isfinite([d["energy"], d["grad_norm"]])):
        return EXIT_NUMERIC
    if not result.converged:
        print(f"solver did not converge ({result.failure or 'iteration budget exhausted'})", file=sys.stderr)
        return EXIT_NOCONV
    if cfg.free and not flat:
        return EXIT_FAIL
    return EXIT_OK


# -- export ----------------------------------------------------------------------------------


def _grid_obj(path: str, pts: np.ndarray, n_u: int, n_v: int) -> None:
    with open(path, "w") as fh:
        fh.write("# first three coordinates as vertices; fourth coordinate in 'vy2' lines\n")
        for x in pts:
            fh.write(f"v {x[0]:.17g} {x[1]:.17g} {x[2]:.17g}\n")
        for x in pts:
            fh.write(f"# vy2 {x[3]:.17g}\n")
        for i in range(n_u - 1):
            for j in range(n_v - 1):
                a, b = i * n_v + j + 1, (i + 1) * n_v + j + 1
                fh.write(f"f {a} {b} {b + 1}\nf {a} {b + 1} {a + 1}\n")


def cmd_export(args) -> int:
    if args.mesh:
        cfg = SolverConfig(nr=args.nr, nphi=args.nphi, seed=args.seed, amplitude=args.amplitude_mesh)
        try:
            if args.example == "plane-disk" and args.amplitude_mesh > 0:
                mesh = initial_mesh(cfg)
            else:
                spec = _build(args)
                chart = spec.charts[args.chart] if args.chart else spec.chart
                mesh = build_mesh(args.nr, args.nphi, chart, symmetric=False)
        except (MeshError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        write_mesh_csv(mesh, args.out)
        if args.obj:
            write_mesh_obj(mesh, args.obj)
        return EXIT_OK
    spec = _build(args)
    n_u, n_v = args.grid
    c, U, V = spec.sample(n_u, n_v, args.chart)
    pts = c.evaluate(U, V).reshape(-1, 4)
    table = np.column_stack([U.ravel(), V.ravel(), pts])
    np.savetxt(args.out, table, delimiter=",", header="u,v,x1,x2,y1,y2", comments="", fmt="%.17g")
    if args.obj:
        _grid_obj(args.obj, pts, n_u, n_v)
    if args.frames:
        ctx = VerifyContext(spec, n_u, n_v, args.boundary_samples, None)
        # one block per boundary curve, tagged by its position in the example's curve list
        rows = [
            np.column_stack([np.full(len(f), n), bd.frames_table(f)]) for n, (_, _, f) in enumerate(ctx.frames())
        ]
        header = ",".join(["curve"] + bd.FRAME_COLUMNS)
        np.savetxt(args.frames, np.vstack(rows), delimiter=",", header=header, comments="", fmt="%.17g")
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 already; keep the message on stderr
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _example_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--example", required=True, help=f"one of: {', '.join(EXAMPLE_NAMES)}")
    p.add_argument("--r0", type=float, help="catenoid-in-ball ball radius (> sqrt 2)")
    p.add_argument("--r", type=float, help="Whitney radius")
    p.add_argument("--w", help="gradient-graph potential name")
    p.add_argument("--amplitude", type=float, help="perturbed-catenoid amplitude")
    p.add_argument("--offset", type=float, help="shifted-plane offset")
    p.add_argument("--chart", help="chart name (defaults to the example's primary chart)")
    p.add_argument("--grid", type=int, nargs=2, default=(50, 50), metavar=("N_U", "N_V"))
    p.add_argument("--boundary-samples", type=int, default=100)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lagcap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="run residual checks on a named example")
    _example_flags(v)
    v.add_argument("--checks", required=True, help=f"comma separated: {','.join(CHECK_NAMES)}")
    v.add_argument("--tol", type=float, help="override every check's tolerance")
    v.add_argument("--out", help="report JSON path (stdout when omitted)")
    v.add_argument("--quiet", action="store_true")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("solve", help="minimise the penalised area of a disk mesh")
    s.add_argument("--nr", type=int, default=16)
    s.add_argument("--nphi", type=int, default=48)
    s.add_argument("--theta", type=_theta, default="free", help="'free' or target contact angle in radians")
    s.add_argument("--lambda-omega", type=_schedule, default=(10.0, 100.0, 1000.0), help="e.g. 10,100,1000")
    s.add_argument("--lambda-theta", type=float, default=0.0)
    s.add_argument("--max-iters", type=int, default=5000)
    s.add_argument("--grad-tol", type=float, default=1e-10)
    s.add_argument("--step-rule", choices=("lbfgs", "bb", "fixed"), default="lbfgs")
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--amplitude", type=float, default=0.05, help="initial perturbation amplitude")
    s.add_argument("--topology", default="disk")
    s.add_argument("--no-symmetry", action="store_true", help="do not impose antipodal oddness")
    s.add_argument("--rotate-seed", type=int, help="apply a random U(2) rotation to the initial mesh")
    s.add_argument("--init-file", help="start from a mesh CSV written by solve or export --mesh")
    s.add_argument("--out-prefix", default="lagcap_solve")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("export", help="write sampled geometry as CSV/OBJ")
    _example_flags(e)
    e.add_argument("--out", required=True, help="sample CSV path")
    e.add_argument("--frames", help="boundary frame CSV path")
    e.add_argument("--obj", help="OBJ path")
    e.add_argument("--mesh", action="store_true", help="write a solver disk mesh instead of a grid")
    e.add_argument("--nr", type=int, default=16)
    e.add_argument("--nphi", type=int, default=48)
    e.add_argument("--seed", type=int, default=7)
    e.add_argument("--mesh-amplitude", dest="amplitude_mesh", type=float, default=0.05)
    e.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"lagcap: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"lagcap: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
