#!/usr/bin/env python3
"""Benchmark the compiled rotated-IoU kernel against the pure-Python twin.

Usage: python bench/bench_iou.py [n_boxes]
"""

import math
import sys
import time

import numpy as np

from obbkit import _clip_py

try:
    from obbkit import _clip as _clip_ext
except ImportError:
    _clip_ext = None


def random_boxes(rng, n):
    return np.column_stack([
        rng.uniform(0, 512, (n, 2)),
        rng.uniform(4, 96, (n, 2)),
        rng.uniform(-math.pi / 2, math.pi / 2, (n, 1)),
    ])


def bench(kernel, a, b, repeats=3):
    best = math.inf
    out = None
    for _ in range(repeats):
        start = time.perf_counter()
        out = kernel.iou_matrix(a, b)
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 300
    rng = np.random.default_rng(0)
    a = random_boxes(rng, n)
    b = random_boxes(rng, n)
    pairs = n * n

    py_time, py_out = bench(_clip_py, a, b, repeats=1)
    print(f"python   kernel: {py_time:8.3f}s  "
          f"({pairs / py_time / 1e3:8.1f} kpairs/s)")
    if _clip_ext is None:
        print("compiled kernel: not built")
        return
    ext_time, ext_out = bench(_clip_ext, a, b)
    print(f"compiled kernel: {ext_time:8.3f}s  "
          f"({pairs / ext_time / 1e3:8.1f} kpairs/s)")
    print(f"speedup: {py_time / ext_time:.1f}x")
    identical = np.array_equal(py_out, ext_out)
    print(f"bit-identical results: {identical}")
    if not identical:
        sys.exit(1)


if __name__ == "__main__":
    main()
