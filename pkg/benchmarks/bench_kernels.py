"""Benchmark the compiled kernel core against the pure-numpy fallback.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from rfeval import _kernels_py as kpy
from rfeval import backend
from rfeval.rng import Rng

try:
    from rfeval import _kernels as kc
except ImportError:
    kc = None


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm-up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def report(name, compiled, fallback, *args):
    tf = timeit(fallback, *args)
    if compiled is None:
        print(f"{name:24s} fallback {tf * 1e3:8.2f} ms   (no compiled extension)")
        return
    tc = timeit(compiled, *args)
    print(f"{name:24s} compiled {tc * 1e3:8.2f} ms   "
          f"fallback {tf * 1e3:8.2f} ms   speedup {tf / tc:5.2f}x")


def main():
    print(f"active backend: {backend.BACKEND}")
    rng = Rng(0)

    x = rng.uniform(-1, 1, (32, 64, 64, 32))
    report("im2col 3x3 (64x64x32)", kc and kc.im2col_nhwc, kpy.im2col_nhwc,
           x, 3, 1, 1)

    report("maxpool 2x2 (64x64x32)", kc and kc.maxpool2d_nhwc, kpy.maxpool2d_nhwc,
           x, 2, 2)

    rows = rng.uniform(0, 1, (3 * 64 * 64, 256))
    taps = np.exp(-0.5 * (np.arange(-9, 10) / 3.0) ** 2)
    taps /= taps.sum()
    report("blur taps=19 (12k x 256)", kc and kc.correlate1d_reflect,
           kpy.correlate1d_reflect, rows, taps)

    a = rng.uniform(-1, 1, (2000, 512)).astype(np.float64)
    report("pairwise d^2 (2000x512)", kc and kc.pairwise_sqdist,
           kpy.pairwise_sqdist, a, a)


if __name__ == "__main__":
    main()
