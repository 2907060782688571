#!/usr/bin/env python3
"""Time the all-pairs shortest-delay kernels: compiled extension vs pure Python.

Usage: python benchmarks/bench_paths.py [--sizes 200,500,1000] [--degree 3]
"""

import argparse
import time

from delayleader import _purepaths
from delayleader.overlay import generate_overlay

try:
    from delayleader import _fastpaths
except ImportError:
    _fastpaths = None


def time_kernel(kernel, n, indptr, nbrs, wts, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        kernel.all_pairs_csr(n, indptr, nbrs, wts)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="200,500,1000")
    parser.add_argument("--degree", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"{'nodes':>6} {'edges':>7} {'pure (s)':>10} {'compiled (s)':>13} {'speedup':>8}")
    for size in sizes:
        g = generate_overlay(size, args.degree, (1, 50), seed=size)
        n, _ids, indptr, nbrs, wts = g.csr()
        pure = time_kernel(_purepaths, n, indptr, nbrs, wts)
        if _fastpaths is None:
            print(f"{size:>6} {g.edge_count():>7} {pure:>10.3f} {'missing':>13} {'-':>8}")
            continue
        fast = time_kernel(_fastpaths, n, indptr, nbrs, wts)
        rows_pure = _purepaths.all_pairs_csr(n, indptr, nbrs, wts)
        rows_fast = _fastpaths.all_pairs_csr(n, indptr, nbrs, wts)
        assert rows_pure == rows_fast, "kernels disagree"
        print(f"{size:>6} {g.edge_count():>7} {pure:>10.3f} {fast:>13.3f} "
              f"{pure / fast:>7.1f}x")


if __name__ == "__main__":
    main()
