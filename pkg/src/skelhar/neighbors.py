"""Exact Euclidean nearest-neighbour search.

Candidates are screened with the BLAS-friendly expansion
|q|^2 - 2 q.w + |w|^2 and then re-ranked on directly computed squared
differences, so results match a brute-force scan bit for bit.  Ties go to
the smaller store index.
"""

from __future__ import annotations

import numpy as np

_CHUNK_CELLS = 4_000_000


def squared_distances(store: np.ndarray, q: np.ndarray) -> np.ndarray:
    return ((store - q) ** 2).sum(axis=-1)


def k_nearest(store: np.ndarray, queries: np.ndarray, k: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Indices (q, k) and squared distances (q, k) of the k nearest stored rows."""
    store = np.ascontiguousarray(store, dtype=float)
    queries = np.ascontiguousarray(queries, dtype=float)
    if queries.ndim == 1:
        queries = queries[None, :]
    m, d = store.shape
    if queries.shape[1] != d:
        raise ValueError(f"dimension mismatch: store has {d}, queries have {queries.shape[1]}")
    if not 1 <= k <= m:
        raise ValueError(f"k={k} must be between 1 and the store size {m}")

    idx_out = np.empty((len(queries), k), dtype=np.int64)
    d2_out = np.empty((len(queries), k))
    store_sq = np.einsum("ij,ij->i", store, store)
    max_sq = float(store_sq.max()) if m else 0.0
    chunk = max(1, _CHUNK_CELLS // max(m, 1))
    slack = 64 * (d + 2) * np.finfo(float).eps

    for start in range(0, len(queries), chunk):
        qs = queries[start : start + chunk]
        q_sq = np.einsum("ij,ij->i", qs, qs)
        approx = q_sq[:, None] - 2.0 * qs @ store.T + store_sq[None, :]
        kth = np.partition(approx, k - 1, axis=1)[:, k - 1]
        tol = slack * (q_sq + max_sq) + 1e-300
        for row, q in enumerate(qs):
            cand = np.flatnonzero(approx[row] <= kth[row] + tol[row])
            exact = squared_distances(store[cand], q)
            order = np.lexsort((cand, exact))[:k]
            idx_out[start + row] = cand[order]
            d2_out[start + row] = exact[order]
    return idx_out, d2_out


def nearest(store: np.ndarray, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest stored index and Euclidean distance for each query row."""
    idx, d2 = k_nearest(store, queries, 1)
    return idx[:, 0], np.sqrt(d2[:, 0])
