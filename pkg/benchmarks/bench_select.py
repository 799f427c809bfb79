#!/usr/bin/env python3
"""Benchmark the compiled top-k selection kernel against the numpy
fallback on the neighbor-search hot path, verifying identical output.

Usage: python benchmarks/bench_select.py [n_tweets] [dim]
"""

import sys
import time

import numpy as np

from trendforge import knn


def unit_rows(rng, n, d):
    m = rng.standard_normal((n, d))
    return (m / np.linalg.norm(m, axis=1)[:, None]).astype(np.float32)


def run(n=20000, dim=256):
    if not knn.HAVE_NATIVE:
        print("compiled kernel not built; run pip install -e . first")
        return 1
    from trendforge import _select, _select_py

    rng = np.random.default_rng(0)
    mat = unit_rows(rng, n, dim)
    ids = rng.permutation(n).astype(np.int64)
    k = max(1, n // 100)
    queries = np.arange(min(n, 2000))
    print(f"n={n} dim={dim} k={k} queries={len(queries)}")

    # selection kernel alone (the similarity matmul is shared by design)
    sims = np.ascontiguousarray(
        mat[queries].astype(np.float64) @ mat.T.astype(np.float64)
    )
    excl = queries.astype(np.int64)
    start = time.perf_counter()
    sel_native = _select.select_topk(sims, ids, excl, k)
    t_native = time.perf_counter() - start
    start = time.perf_counter()
    sel_python = _select_py.select_topk(sims, ids, excl, k)
    t_python = time.perf_counter() - start
    sel_same = bool(np.array_equal(sel_native, sel_python))
    print(f"  select only: native {t_native:.3f}s, python {t_python:.3f}s, "
          f"speedup {t_python / t_native:.2f}x, identical: {sel_same}")

    results = {}
    timings = {}
    for native in (True, False):
        name = knn.backend_name(native)
        start = time.perf_counter()
        results[name] = knn.topk_cosine(mat, ids, queries, k, native=native)
        timings[name] = time.perf_counter() - start
    identical = bool(np.array_equal(results["native"], results["python"]))
    for name in ("native", "python"):
        rate = len(queries) / timings[name]
        print(f"  end-to-end {name:7s} {timings[name]:8.3f}s "
              f"({rate:8.1f} queries/s)")
    print(f"  end-to-end speedup {timings['python'] / timings['native']:.2f}x "
          f"(matmul-bound), outputs identical: {identical}")
    return 0 if identical and sel_same else 1


if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
    dim = int(sys.argv[2]) if len(sys.argv) > 2 else 256
    sys.exit(run(n, dim))
