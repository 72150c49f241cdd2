#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Usage:
    python benchmarks/bench_kernels.py [--n 20000] [--dim 512] [--prompts 64]
                                       [--k 3] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from synthengine import _pykernels

try:
    from synthengine import _ckernels
except ImportError:
    _ckernels = None


def unit_rows(rng, n, d):
    m = rng.standard_normal((n, d))
    return np.ascontiguousarray(m / np.linalg.norm(m, axis=1, keepdims=True))


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=20000, help="pool size")
    parser.add_argument("--dim", type=int, default=512)
    parser.add_argument("--prompts", type=int, default=64, help="templates per polarity")
    parser.add_argument("--k", type=int, default=3)
    parser.add_argument("--coverage-n", type=int, default=2000, help="anchors for the coverage bench")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(7)
    x = unit_rows(rng, args.n, args.dim)
    pos = unit_rows(rng, args.prompts, args.dim)
    neg = unit_rows(rng, args.prompts, args.dim)
    real = np.ascontiguousarray(rng.standard_normal((args.coverage_n, args.dim)))
    syn = np.ascontiguousarray(rng.standard_normal((args.coverage_n, args.dim)))
    radius = float(np.median(np.linalg.norm(real[:64, None] - real[None, :64], axis=2)))

    cases = {
        f"topk_margins  n={args.n} d={args.dim} p={args.prompts} k={args.k}": (
            lambda m: m.topk_margins(x, pos, neg, args.k)
        ),
        f"nearest_other n={args.coverage_n} d={args.dim}": (
            lambda m: m.nearest_other_sqdists(real)
        ),
        f"coverage_hits n={args.coverage_n} d={args.dim}": (
            lambda m: m.coverage_hits(real, syn, radius)
        ),
    }

    print(f"{'kernel':<44} {'numpy':>10} {'cython':>10} {'speedup':>8}")
    for name, call in cases.items():
        t_py = timeit(lambda: call(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:<44} {t_py * 1e3:9.1f}ms {'n/a':>10} {'n/a':>8}")
            continue
        out_py = np.asarray(call(_pykernels), dtype=np.float64)
        out_c = np.asarray(call(_ckernels), dtype=np.float64)
        np.testing.assert_allclose(out_c, out_py, atol=1e-9)
        t_c = timeit(lambda: call(_ckernels), args.repeat)
        print(f"{name:<44} {t_py * 1e3:9.1f}ms {t_c * 1e3:9.1f}ms {t_py / t_c:7.2f}x")


if __name__ == "__main__":
    main()
