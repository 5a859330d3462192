"""Fill-reducing symmetric ordering on adjacency graphs.

Provides a deterministic minimum-degree ordering with elimination-graph
updates (used on the compressed block graph before factorization) and a
symbolic factorization fill counter used as a test metric.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .sparse import Permutation, SparseSymMatrix, _freeze


@dataclass(frozen=True)
class AdjGraph:
    """Undirected graph as CSR adjacency; neighbor lists sorted, no self loops."""

    n_vertices: int
    indptr: np.ndarray
    neighbors: np.ndarray

    @classmethod
    def from_edges(cls, n: int, u, v) -> "AdjGraph":
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        keep = u != v
        u, v = u[keep], v[keep]
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        key = src * n + dst
        key = np.unique(key)
        src = key // n
        dst = key % n
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(n, _freeze(indptr), _freeze(dst))

    @classmethod
    def from_matrix(cls, a: SparseSymMatrix) -> "AdjGraph":
        rows = np.repeat(np.arange(a.n, dtype=np.int64), np.diff(a.row_starts))
        return cls.from_edges(a.n, rows, a.col_indices)

    def adjacency(self, v: int) -> np.ndarray:
        return self.neighbors[self.indptr[v]:self.indptr[v + 1]]


def min_degree_order(g: AdjGraph) -> Permutation:
    """Minimum-degree elimination ordering; ties break toward smaller id.

    Eliminating a vertex turns its current neighborhood into a clique.  The
    returned permutation maps vertex id to elimination position.
    """
    n = g.n_vertices
    adj = [set(g.adjacency(v).tolist()) for v in range(n)]
    heap = [(len(adj[v]), v) for v in range(n)]
    heapq.heapify(heap)
    eliminated = np.zeros(n, dtype=bool)
    position = np.empty(n, dtype=np.int64)
    count = 0
    while heap:
        deg, v = heapq.heappop(heap)
        if eliminated[v] or deg != len(adj[v]):
            continue
        eliminated[v] = True
        position[v] = count
        count += 1
        nbrs = adj[v]
        for u in nbrs:
            au = adj[u]
            au.discard(v)
            au.update(nbrs)
            au.discard(u)
            heapq.heappush(heap, (len(au), u))
        adj[v] = set()
    return Permutation.from_forward(position)


def symbolic_fill_count(a: SparseSymMatrix, p: Permutation) -> int:
    """Nonzeros of the complete LDL^T pattern (lower incl. diagonal) under p.

    Treats the pattern as factorizable without numerical pivoting; used to
    compare orderings.
    """
    n = a.n
    rows = p.forward[np.repeat(np.arange(n, dtype=np.int64), np.diff(a.row_starts))]
    cols = p.forward[a.col_indices]
    lo = np.minimum(rows, cols)
    hi = np.maximum(rows, cols)
    below = [set() for _ in range(n)]  # strictly-below-diagonal pattern per column
    for r, c in zip(hi, lo):
        if r != c:
            below[c].add(int(r))
    children = [[] for _ in range(n)]
    total = 0
    for j in range(n):
        patt = below[j]
        for c in children[j]:
            patt.update(i for i in below[c] if i > j)
        total += 1 + len(patt)
        if patt:
            parent = min(patt)
            children[parent].append(j)
        below[j] = patt
    return total
