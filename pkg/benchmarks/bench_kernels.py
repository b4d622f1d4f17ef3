"""Compiled vs numpy kernel timings for the 0D and 1D solvers.

    python benchmarks/bench_kernels.py --points 64 --repeat 3
"""

import argparse
import sys
import time

import numpy as np

from mfsobol.models import HemoConfig, qoi_0d, qoi_1d
from mfsobol.models._backend import BACKEND
from mfsobol.sampling import carotid_space, sobol_points


def bench(fn, Z, backend, repeat):
    fn(Z[:1], backend=backend)  # warm caches
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(Z, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=64, help="input points per call")
    parser.add_argument("--repeat", type=int, default=3, help="best-of repetitions")
    args = parser.parse_args(argv)

    Z = carotid_space().scale(sobol_points(3, args.points, 1))
    cfg = HemoConfig()
    backends = ["python"] + (["c"] if BACKEND == "c" else [])
    if BACKEND != "c":
        print("compiled extension not built; timing the numpy kernels only", file=sys.stderr)

    print(f"{'model':>5} {'backend':>8} {'total [s]':>10} {'per solve [ms]':>15} {'max rel diff':>13}")
    for name, fn in (("0D", qoi_0d), ("1D", qoi_1d)):
        ref = None
        for b in backends:
            t, out = bench(lambda Z, backend: fn(Z, cfg, backend=backend), Z, b, args.repeat)
            diff = "-" if ref is None else f"{np.max(np.abs(out - ref) / np.abs(ref)):.1e}"
            ref = out if ref is None else ref
            print(f"{name:>5} {b:>8} {t:>10.3f} {1e3 * t / args.points:>15.3f} {diff:>13}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
