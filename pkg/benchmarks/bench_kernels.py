#!/usr/bin/env python3
"""Benchmark the numba and numpy assembly backends against each other.

Times end-to-end gradient computation (geometry tables cached, so the hot
path is scheme weighting + kernel assembly + 2x2 solves) on meshes of
increasing size, in both arithmetic modes, and verifies that the two
backends agree bit-for-bit on every run.

Usage: python3 benchmarks/bench_kernels.py [--levels L0 L1] [--repeats N]
"""

import argparse
import time

import numpy as np

from fvgrad import fields, gradients, kernels, meshgen
from fvgrad.numerics import PrecisionMode


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, nargs=2, default=[3, 6],
                    metavar=("L0", "L1"),
                    help="inclusive perturbed-grid level range (default: 3 6)")
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repeats, best-of (default: 5)")
    args = ap.parse_args()

    try:
        kernels.get_backend("numba").framework_double  # force jit import
        backends = ["numpy", "numba"]
    except ImportError:
        print("numba not importable; timing the numpy backend only")
        backends = ["numpy"]

    scheme = gradients.scheme_by_name("LS(1)")
    field = fields.tanh_product()

    print(f"{'cells':>8} {'mode':>8} "
          + " ".join(f"{b + ' [ms]':>12}" for b in backends)
          + ("  speedup" if len(backends) == 2 else ""))
    for level in range(args.levels[0], args.levels[1] + 1):
        mesh = meshgen.generate(meshgen.GridFamilySpec("perturbed", level,
                                                       {"seed": 1}))
        for prec in (PrecisionMode.DOUBLE, PrecisionMode.EXTENDED):
            cf = fields.sample(field, mesh, prec)
            results = {}
            timings = []
            for b in backends:
                run = lambda b=b: gradients.compute(mesh, cf, scheme,
                                                    prec, backend=b)
                results[b] = run()   # warm-up (and jit compile) run
                timings.append(best_of(run, args.repeats) * 1e3)
            if len(backends) == 2:
                a, c = results["numpy"], results["numba"]
                assert np.array_equal(a.grad, c.grad)
                assert np.array_equal(a.grad_lo, c.grad_lo)
                assert np.array_equal(a.flags, c.flags)
                extra = f"  {timings[0] / timings[1]:7.2f}x"
            else:
                extra = ""
            print(f"{mesh.n_cells:>8} {prec.value:>8} "
                  + " ".join(f"{t:12.3f}" for t in timings) + extra)
    if len(backends) == 2:
        print("backends agree bit-for-bit on every run")


if __name__ == "__main__":
    main()
