"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so the environment switch is not
needed.  Results are also checked to agree bitwise.
"""

import argparse
import time

import numpy as np

from fredholm_minors import _pykernels

try:
    from fredholm_minors import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def series_case(m, p, n, rng):
    N = np.ascontiguousarray(rng.uniform(-1, 1, (m, m)))
    w = np.full(m, 1.0 / m)
    xs = np.arange(n, dtype=np.int64)
    ys = np.arange(n, 2 * n, dtype=np.int64) % m
    pool = np.array([i for i in range(m) if i not in set(xs) | set(ys)], dtype=np.int64)
    firsts = len(pool) - p + 1
    return lambda k: k.subset_minor_sums(N, w, xs, ys, pool, p, 0, firsts)


def grassmann_case(m, rng):
    size = 1 << (2 * m)
    a = rng.standard_normal(size)
    b = rng.standard_normal(size)
    return lambda k: k.grassmann_mul(a, b, 2 * m)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    cases = [
        ("series m=16 p=4 n=1", series_case(16, 4, 1, rng)),
        ("series m=20 p=5 n=2", series_case(20, 5, 2, rng)),
        ("series m=24 p=3 n=0", series_case(24, 3, 0, rng)),
        ("grassmann product m=4", grassmann_case(4, rng)),
        ("grassmann product m=5", grassmann_case(5, rng)),
    ]
    print(f"{'case':28s} {'numpy [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} bitwise")
    for name, fn in cases:
        t_py, out_py = best_of(lambda: fn(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:28s} {t_py:11.4f} {'n/a':>11s}")
            continue
        t_c, out_c = best_of(lambda: fn(_ckernels), args.repeat)
        same = np.array_equal(np.asarray(out_py), np.asarray(out_c))
        print(f"{name:28s} {t_py:11.4f} {t_c:11.4f} {t_py / t_c:8.1f} {same}")


if __name__ == "__main__":
    main()
