"""Compare the compiled and pure-numpy kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--n 400] [--repeat 3] [--seed 0]

The script times each public kernel twice: once through the active backend
(numba-compiled unless ``VERSEGRAPH_NO_NUMBA=1``) and once through the plain
Python reference implementation, then prints a small table with speedups.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from versegraph import kernels
from versegraph.kernels import (
    _betweenness_raw_impl,
    _consensus_run_impl,
    _hop_distances_impl,
)


def random_csr(n: int, avg_degree: float, rng) -> tuple[np.ndarray, np.ndarray]:
    p = min(1.0, avg_degree / max(1, n - 1))
    upper = rng.random((n, n)) < p
    adj = np.triu(upper, 1)
    adj = adj | adj.T
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = adj.sum(axis=1).cumsum()
    indices = np.concatenate([np.flatnonzero(adj[i]) for i in range(n)]).astype(np.int64)
    return indptr, indices


def timed(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=400, help="vertex count")
    ap.add_argument("--repeat", type=int, default=3, help="timing repetitions")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    indptr, indices = random_csr(args.n, 6.0, rng)
    n = args.n

    m = len(indices) // 2
    eu = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    ev = indices
    keep = eu < ev
    eu, ev = eu[keep], ev[keep]
    w = np.full(len(eu), 0.05)
    x0 = rng.normal(size=n)

    cases = [
        ("betweenness_raw",
         lambda: kernels.betweenness_raw(indptr, indices, indptr, indices, n),
         lambda: _betweenness_raw_impl(indptr, indices, indptr, indices, n)),
        ("hop_distances",
         lambda: kernels.hop_distances(indptr, indices, n),
         lambda: _hop_distances_impl(indptr, indices, n)),
        ("consensus_run",
         lambda: kernels.consensus_run(eu, ev, w, x0, 1e-8, 5000),
         lambda: _consensus_run_impl(eu, ev, w, x0.copy(), 1e-8, 5000)),
    ]

    backend = "numba" if kernels.USING_NUMBA else "python"
    print(f"n={n} edges={m} active_backend={backend} repeat={args.repeat}")
    print(f"{'kernel':<18} {'active (s)':>12} {'reference (s)':>14} {'speedup':>9}")
    for name, active, reference in cases:
        active()  # warm up (jit compilation)
        ta = timed(active, args.repeat)
        tr = timed(reference, args.repeat)
        print(f"{name:<18} {ta:>12.4f} {tr:>14.4f} {tr / ta:>8.1f}x")


if __name__ == "__main__":
    main()
