#!/usr/bin/env python3
"""Benchmark the compiled Gibbs kernel against the pure-Python fallback.

Both kernels are bit-compatible (same seeded draws, same arithmetic), so
this measures speed only. Run from the repo root after an editable install:

    python benchmarks/bench_gibbs.py [--docs 400] [--k 20] [--iters 30]
"""

import argparse
import time

import numpy as np

from stdcache.topics import _gibbs_py

try:
    from stdcache.topics import _gibbs
except ImportError:
    _gibbs = None


def make_problem(n_docs, k, vocab, mean_len, seed):
    rng = np.random.default_rng(seed)
    lens = rng.integers(mean_len // 2, mean_len * 2, n_docs)
    doc_ptr = np.zeros(n_docs + 1, dtype=np.int64)
    doc_ptr[1:] = np.cumsum(lens)
    tokens = rng.integers(0, vocab, int(doc_ptr[-1])).astype(np.int32)
    return doc_ptr, tokens


def run(kernel, doc_ptr, tokens, k, vocab, iters, seed):
    n_docs = len(doc_ptr) - 1
    z = np.zeros(len(tokens), dtype=np.int32)
    n_tw = np.zeros((k, vocab), dtype=np.int64)
    n_t = np.zeros(k, dtype=np.int64)
    n_dt = np.zeros((n_docs, k), dtype=np.int64)
    t0 = time.perf_counter()
    kernel.gibbs_fit(doc_ptr, tokens, z, n_tw, n_t, n_dt,
                     50.0 / k, 0.01, iters, seed, True, True)
    return time.perf_counter() - t0, n_t


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--docs", type=int, default=400)
    ap.add_argument("--k", type=int, default=20)
    ap.add_argument("--vocab", type=int, default=2000)
    ap.add_argument("--mean-len", type=int, default=80)
    ap.add_argument("--iters", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    doc_ptr, tokens = make_problem(args.docs, args.k, args.vocab, args.mean_len, args.seed)
    samples = len(tokens) * args.iters
    print(f"{args.docs} docs, {len(tokens)} tokens, k={args.k}, {args.iters} sweeps "
          f"({samples / 1e6:.1f}M samples)")

    py_time, py_counts = run(_gibbs_py, doc_ptr, tokens, args.k, args.vocab, args.iters, args.seed)
    print(f"pure python : {py_time:8.3f} s   {samples / py_time / 1e3:8.0f} ksamples/s")

    if _gibbs is None:
        print("compiled    : not built (pip install -e . with Cython available)")
        return

    c_time, c_counts = run(_gibbs, doc_ptr, tokens, args.k, args.vocab, args.iters, args.seed)
    print(f"compiled    : {c_time:8.3f} s   {samples / c_time / 1e3:8.0f} ksamples/s")
    print(f"speedup     : {py_time / c_time:8.1f} x")
    match = "identical" if np.array_equal(py_counts, c_counts) else "MISMATCH"
    print(f"final topic totals {match}")


if __name__ == "__main__":
    main()
