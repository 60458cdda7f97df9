"""Compare the compiled and numpy Monte Carlo kernels.

Usage: python benchmarks/bench_kernels.py [--trials N] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from rischannel import _fallback

try:
    from rischannel import _kernels
except ImportError:  # extension not built
    _kernels = None

CASES = [(50, 64), (100, 64), (20, 256)]


def bench(impl, M, N, trials, repeat):
    def run():
        impl.envelope_block(1, 0, trials, M, N, 1.0, 0.1, np.pi, 0.0)
    return min(timeit.repeat(run, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'M':>5} {'N':>5} {'python [s]':>11} {'compiled [s]':>13} {'speedup':>8}")
    for M, N in CASES:
        t_py = bench(_fallback, M, N, args.trials, args.repeat)
        if _kernels is None:
            print(f"{M:>5} {N:>5} {t_py:>11.4f} {'n/a':>13} {'n/a':>8}")
            continue
        t_c = bench(_kernels, M, N, args.trials, args.repeat)
        print(f"{M:>5} {N:>5} {t_py:>11.4f} {t_c:>13.4f} {t_py / t_c:>7.1f}x")
    if _kernels is not None:
        a = _fallback.uniform_block(9, 0, 0, 1000, 50)
        b = _kernels.uniform_block(9, 0, 0, 1000, 50)
        print("uniforms bit-identical:", bool(np.array_equal(a, b)))


if __name__ == "__main__":
    main()
