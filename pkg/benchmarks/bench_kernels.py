"""Time the triangle energy/gradient kernel under numba and numpy.

    python benchmarks/bench_kernels.py --sizes 16x48 32x96 64x192 --repeat 20

Also runs one short solve per backend so the end-to-end effect is visible.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lagcap import _kernels
from lagcap._backend import HAVE_NUMBA
from lagcap.solver import SolverConfig, initial_mesh, minimize


def _size(text: str) -> tuple[int, int]:
    nr, nphi = text.lower().split("x")
    return int(nr), int(nphi)


def time_kernel(pos, tris, backend: str, repeat: int) -> float:
    _kernels.triangle_terms(pos, tris, 100.0, backend)  # warm-up (and JIT compile)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        _kernels.triangle_terms(pos, tris, 100.0, backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", nargs="+", type=_size, default=[(16, 48), (32, 96), (64, 192)])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--solve-iters", type=int, default=300)
    args = ap.parse_args(argv)

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    print(f"{'mesh':>10} {'triangles':>10} " + " ".join(f"{b + ' [ms]':>12}" for b in backends) + "   max |diff|")
    for nr, nphi in args.sizes:
        mesh = initial_mesh(SolverConfig(nr=nr, nphi=nphi))
        pos, tris = mesh.positions, mesh.triangles
        times = [time_kernel(pos, tris, b, args.repeat) for b in backends]
        outs = [_kernels.triangle_terms(pos, tris, 100.0, b) for b in backends]
        diff = max(float(np.max(np.abs(o[2] - outs[0][2]))) for o in outs)
        cells = " ".join(f"{1e3 * t:12.3f}" for t in times)
        print(f"{nr:>4}x{nphi:<5} {len(tris):>10} {cells}   {diff:.2e}")

    print(f"\nsolve, {args.solve_iters} iterations on 16x48:")
    for b in backends:
        cfg = SolverConfig(max_iters=args.solve_iters, backend=b)
        res = minimize(initial_mesh(cfg), cfg)
        print(f"  {b:6s} {res.wall_time:7.3f} s  energy {res.diagnostics['energy']:.15g}")


if __name__ == "__main__":
    main()
