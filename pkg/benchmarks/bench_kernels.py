"""Throughput comparison: compiled kernels vs the pure-numpy fallbacks.

Times im2col, col2im and maxpool_forward on conv-sized workloads and
prints a table with the speedup of the compiled backend.  Run after an
editable install:

    python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from highlights.nnet import kernels


def _time(fn, *args, repeats: int, warmup: int = 2) -> float:
    for _ in range(warmup):
        fn(*args)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=16)
    parser.add_argument("--size", type=int, default=64)
    parser.add_argument("--channels", type=int, default=8)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    if kernels.BACKEND != "cython":
        print("compiled extension not available; nothing to compare")
        return

    rng = np.random.default_rng(0)
    x = rng.normal(size=(args.batch, args.channels, args.size, args.size))
    cols = kernels.im2col(x, 3, 3, 1, 1)

    cases = [
        ("im2col 3x3/s1/p1", kernels._ckernels.im2col, (x, 3, 3, 1, 1),
         kernels._im2col_numpy, (x, 3, 3, 1, 1)),
        ("col2im 3x3/s1/p1", kernels._ckernels.col2im,
         (cols, *x.shape, 3, 3, 1, 1),
         kernels._col2im_numpy, (cols, *x.shape, 3, 3, 1, 1)),
        ("maxpool 2x2/s2", kernels._ckernels.maxpool_forward, (x, 2, 2),
         kernels._maxpool_forward_numpy, (x, 2, 2)),
    ]

    print(f"{'kernel':<20} {'cython':>10} {'numpy':>10} {'speedup':>9}")
    for name, cfn, cargs, nfn, nargs in cases:
        tc = _time(cfn, *cargs, repeats=args.repeats)
        tn = _time(nfn, *nargs, repeats=args.repeats)
        print(f"{name:<20} {tc * 1e3:>8.2f}ms {tn * 1e3:>8.2f}ms {tn / tc:>8.2f}x")


if __name__ == "__main__":
    main()
