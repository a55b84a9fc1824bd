"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from geoswarm import _pykernels

try:
    from geoswarm import _kernels
except ImportError:
    _kernels = None


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _sphere_points(rng, n):
    x = rng.standard_normal((n, 3))
    x[:, 2] = np.abs(x[:, 2]) + 2.0
    return x / np.linalg.norm(x, axis=1)[:, None]


def cases(rng):
    for n in (50, 200, 800):
        X = _sphere_points(rng, n)
        coef = rng.random((n, n)) / n

        def velocity(mod, X=X, coef=coef):
            th = mod.sphere_pairwise_angles(X, X)
            mod.sphere_log_weighted_sum(X, X, th, coef)

        yield f"sphere velocity n={n}", velocity
    for m, n in ((50, 50), (100, 400), (200, 800)):
        a = np.full(m, 1.0 / m)
        b = np.full(n, 1.0 / n)
        C = rng.random((m, n))
        yield f"network simplex {m}x{n}", lambda mod, a=a, b=b, C=C: mod.network_simplex(a, b, C)
    for n in (50, 200, 400):
        C = rng.random((n, n))
        yield f"assignment {n}x{n}", lambda mod, C=C: mod.linear_assignment(C)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'case':<28}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, fn in cases(rng):
        tp = _time(lambda: fn(_pykernels), args.repeat)
        if _kernels is None:
            print(f"{name:<28}{tp:>12.4f}{'n/a':>12}{'':>10}")
            continue
        tc = _time(lambda: fn(_kernels), args.repeat)
        print(f"{name:<28}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
