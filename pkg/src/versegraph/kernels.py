"""Hot numeric kernels with two interchangeable backends.

The default backend compiles the inner loops with numba's ``@njit``.  Setting
the environment variable ``VERSEGRAPH_NO_NUMBA=1`` before import (or running
where numba is unavailable) selects the pure-numpy fallback instead.  Both
backends are exercised by the test suite and compared by
``benchmarks/bench_kernels.py``.

All kernels operate on CSR adjacency (``indptr``, ``indices``) over positional
vertex indices ``0..n-1``.
"""

from __future__ import annotations

import os

import numpy as np

_want_numba = os.environ.get("VERSEGRAPH_NO_NUMBA", "0") not in ("1", "true", "yes")

if _want_numba:
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USING_NUMBA = False
else:
    USING_NUMBA = False


# ---------------------------------------------------------------------------
# Pure implementations (compiled when numba is active)
# ---------------------------------------------------------------------------

def _betweenness_raw_impl(indptr, indices, rindptr, rindices, n):
    # Brandes accumulation over unweighted shortest paths; returns the
    # ordered-pair sum of pair dependencies for every vertex.  The reverse
    # CSR supplies in-neighbors for the dependency pass (identical arrays
    # for undirected input).
    bc = np.zeros(n, dtype=np.float64)
    order = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.int64)
    sigma = np.empty(n, dtype=np.float64)
    delta = np.empty(n, dtype=np.float64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        dist[:] = -1
        sigma[:] = 0.0
        delta[:] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        queue[0] = s
        head = 0
        tail = 1
        cnt = 0
        while head < tail:
            v = queue[head]
            head += 1
            order[cnt] = v
            cnt += 1
            for j in range(indptr[v], indptr[v + 1]):
                w = indices[j]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue[tail] = w
                    tail += 1
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
        for i in range(cnt - 1, 0, -1):
            w = order[i]
            for j in range(rindptr[w], rindptr[w + 1]):
                # predecessors of w lie one hop closer to s
                v = rindices[j]
                if dist[v] == dist[w] - 1:
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return bc


def _hop_distances_impl(indptr, indices, n):
    # all-pairs BFS; -1 marks unreachable pairs
    out = np.full((n, n), -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        out[s, s] = 0
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            v = queue[head]
            head += 1
            for j in range(indptr[v], indptr[v + 1]):
                w = indices[j]
                if out[s, w] < 0:
                    out[s, w] = out[s, v] + 1
                    queue[tail] = w
                    tail += 1
    return out


def _consensus_run_impl(eu, ev, w, x0, tol, max_rounds):
    # synchronous weighted averaging over undirected edges; stops when the
    # max pairwise spread of the state vector drops to tol
    x = x0.copy()
    n = x.shape[0]
    m = eu.shape[0]
    rounds = 0
    while rounds < max_rounds:
        lo = x[0]
        hi = x[0]
        for i in range(1, n):
            if x[i] < lo:
                lo = x[i]
            if x[i] > hi:
                hi = x[i]
        if hi - lo <= tol:
            break
        nxt = x.copy()
        for k in range(m):
            u = eu[k]
            v = ev[k]
            d = w[k] * (x[v] - x[u])
            nxt[u] += d
            nxt[v] -= d
        x = nxt
        rounds += 1
    return rounds, x


if USING_NUMBA:
    _betweenness_raw_backend = njit(cache=True)(_betweenness_raw_impl)
    _hop_distances_backend = njit(cache=True)(_hop_distances_impl)
    _consensus_run_backend = njit(cache=True)(_consensus_run_impl)
else:
    _betweenness_raw_backend = _betweenness_raw_impl
    _hop_distances_backend = _hop_distances_impl
    _consensus_run_backend = _consensus_run_impl


# ---------------------------------------------------------------------------
# Public wrappers
# ---------------------------------------------------------------------------

def betweenness_raw(
    indptr: np.ndarray,
    indices: np.ndarray,
    rindptr: np.ndarray,
    rindices: np.ndarray,
    n: int,
) -> np.ndarray:
    """Unnormalized betweenness (ordered-pair pair-dependency sums)."""
    if n == 0:
        return np.zeros(0, dtype=np.float64)
    return _betweenness_raw_backend(
        np.ascontiguousarray(indptr, dtype=np.int64),
        np.ascontiguousarray(indices, dtype=np.int64),
        np.ascontiguousarray(rindptr, dtype=np.int64),
        np.ascontiguousarray(rindices, dtype=np.int64),
        n,
    )


def hop_distances(indptr: np.ndarray, indices: np.ndarray, n: int) -> np.ndarray:
    """All-pairs unweighted hop distances; -1 where unreachable."""
    if n == 0:
        return np.zeros((0, 0), dtype=np.int64)
    return _hop_distances_backend(
        np.ascontiguousarray(indptr, dtype=np.int64),
        np.ascontiguousarray(indices, dtype=np.int64),
        n,
    )


def consensus_run(
    edges_u: np.ndarray,
    edges_v: np.ndarray,
    weights: np.ndarray,
    x0: np.ndarray,
    tol: float,
    max_rounds: int,
) -> tuple[int, np.ndarray]:
    """Run synchronous averaging until the value spread is within ``tol``."""
    return _consensus_run_backend(
        np.ascontiguousarray(edges_u, dtype=np.int64),
        np.ascontiguousarray(edges_v, dtype=np.int64),
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(x0, dtype=np.float64),
        float(tol),
        int(max_rounds),
    )
