"""Maximum weighted matching, dual-based symmetric scaling, and the
1x1/2x2 block permutation derived from the matching's cycle structure.

The pipeline: entry magnitudes become assignment costs through a log
transform, a sparse shortest-augmenting-path solver produces a perfect
matching with LP duals, the duals yield a symmetric scaling under which
every entry has modulus <= 1 and matched entries have modulus 1, and the
matching permutation's cycles are split into 1-cycles and 2-cycles.
Ordering the 2-cycles adjacently hands the factorization strong candidate
2x2 pivots.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .ordering import AdjGraph, min_degree_order
from .sparse import DiagScaling, Permutation, SparseSymMatrix, _freeze


class StructurallySingularError(ValueError):
    """No perfect matching exists; ``rows`` names a Hall-violating row set."""

    def __init__(self, rows):
        self.rows = sorted(int(r) for r in rows)
        super().__init__(f"structurally singular: rows {self.rows} cannot all be matched")


@dataclass(frozen=True)
class CostMatrix:
    """Sparse assignment costs in CSR; absent entries are implicitly +inf."""

    n: int
    indptr: np.ndarray
    cols: np.ndarray
    costs: np.ndarray

    @classmethod
    def from_entries(cls, n, rows, cols, costs) -> "CostMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        costs = np.asarray(costs, dtype=np.float64)
        order = np.lexsort((cols, rows))
        rows, cols, costs = rows[order], cols[order], costs[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        return cls(n, _freeze(np.cumsum(indptr)), _freeze(cols), _freeze(costs))

    @classmethod
    def from_dense(cls, dense) -> "CostMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        n = dense.shape[0]
        rows, cols = np.nonzero(np.isfinite(dense))
        return cls.from_entries(n, rows, cols, dense[rows, cols])

    def row(self, i: int):
        s, e = self.indptr[i], self.indptr[i + 1]
        return self.cols[s:e], self.costs[s:e]


@dataclass(frozen=True)
class AssignmentResult:
    """Perfect matching with LP duals; sigma maps column -> matched row."""

    sigma: Permutation
    u: np.ndarray
    v: np.ndarray
    objective: float


@dataclass(frozen=True)
class Block:
    """A 1x1 or 2x2 diagonal block; members ascending."""

    members: tuple

    def __post_init__(self):
        if len(self.members) not in (1, 2):
            raise ValueError("blocks have one or two members")

    @property
    def is_pair(self) -> bool:
        return len(self.members) == 2


@dataclass(frozen=True)
class SymMatchingResult:
    p_s: Permutation
    blocks: list
    scaling: DiagScaling


def _row_maxima(a: SparseSymMatrix) -> np.ndarray:
    starts, cols, vals = a.full_csr()
    out = np.zeros(a.n)
    absv = np.abs(vals)
    for i in range(a.n):
        s, e = starts[i], starts[i + 1]
        if e > s:
            out[i] = absv[s:e].max()
    return out


def log_weight_transform(a: SparseSymMatrix) -> CostMatrix:
    """Costs log(max_j |a_ij|) - log|a_ij| on the numerically nonzero pattern.

    Minimizing total cost over perfect matchings maximizes the product of
    matched magnitudes.  Zero-valued entries carry no information about
    magnitude and are treated as absent; a row whose entries are all zero
    cannot be matched and is rejected here.
    """
    starts, cols, vals = a.full_csr()
    keep = vals != 0.0
    rows = np.repeat(np.arange(a.n, dtype=np.int64), np.diff(starts))
    zero_rows = np.setdiff1d(np.arange(a.n), rows[keep])
    if len(zero_rows):
        raise StructurallySingularError(zero_rows)
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    logabs = np.log(np.abs(vals))
    rowmax = np.full(a.n, -np.inf)
    np.maximum.at(rowmax, rows, logabs)
    return CostMatrix.from_entries(a.n, rows, cols, rowmax[rows] - logabs)


def solve_lap(c: CostMatrix) -> AssignmentResult:
    """Minimum-cost perfect matching by shortest augmenting paths.

    Row duals u and column duals v satisfy u_i + v_j <= c_ij with equality
    on matched pairs.  Raises StructurallySingularError when no perfect
    matching exists.
    """
    n = c.n
    if len(c.costs) and not np.all(np.isfinite(c.costs)):
        raise ValueError("costs must be finite on present entries")
    u = np.zeros(n)
    v = np.full(n, np.inf)
    # column-minima start keeps reduced costs nonnegative for any cost sign
    np.minimum.at(v, c.cols, c.costs)
    v[np.isinf(v)] = 0.0
    match_row = np.full(n, -1, dtype=np.int64)  # row -> column
    match_col = np.full(n, -1, dtype=np.int64)  # column -> row
    for i in range(n):
        js, cs = c.row(i)
        for j, cij in zip(js, cs):
            if match_col[j] < 0 and cij - u[i] - v[j] == 0.0:
                match_col[j] = i
                match_row[i] = j
                break
    dist = np.empty(n)
    pred = np.empty(n, dtype=np.int64)
    for i0 in range(n):
        if match_row[i0] >= 0:
            continue
        dist.fill(np.inf)
        pred.fill(-1)
        settled = np.zeros(n, dtype=bool)
        order = []  # settled columns with their final distance
        heap = []
        js, cs = c.row(i0)
        for j, cij in zip(js, cs):
            d = cij - u[i0] - v[j]
            if d < dist[j]:
                dist[j] = d
                pred[j] = i0
                heapq.heappush(heap, (d, int(j)))
        sink = -1
        delta = 0.0
        while heap:
            d, j = heapq.heappop(heap)
            if settled[j] or d > dist[j]:
                continue
            settled[j] = True
            if match_col[j] < 0:
                sink = j
                delta = d
                break
            order.append((j, d))
            i = match_col[j]
            js, cs = c.row(i)
            base = d - u[i] - v[js]
            nds = base + cs
            for j2, nd in zip(js, nds):
                if not settled[j2] and nd < dist[j2]:
                    dist[j2] = nd
                    pred[j2] = i
                    heapq.heappush(heap, (float(nd), int(j2)))
        if sink < 0:
            bad = {int(i0)} | {int(match_col[j]) for j, _ in order}
            raise StructurallySingularError(bad)
        u[i0] += delta
        for j, dj in order:
            adj = delta - dj
            u[match_col[j]] += adj
            v[j] -= adj
        j = sink
        while True:
            i = pred[j]
            match_col[j] = i
            match_row[i], j = j, match_row[i]
            if i == i0:
                break
    idx = np.arange(n)
    cost_lookup = {}
    rows_all = np.repeat(idx, np.diff(c.indptr))
    for r, col, cost in zip(rows_all, c.cols, c.costs):
        cost_lookup[(int(r), int(col))] = float(cost)
    objective = sum(cost_lookup[(int(match_col[j]), int(j))] for j in idx) if n else 0.0
    return AssignmentResult(
        sigma=Permutation.from_forward(match_col),
        u=_freeze(u), v=_freeze(v), objective=float(objective))


_EXP_GUARD = 700.0  # |log| beyond this would overflow exp in double precision


def scaling_from_duals(res: AssignmentResult, a: SparseSymMatrix) -> DiagScaling:
    """Symmetric scaling from LAP duals: d = sqrt(r * s) elementwise with
    row scaling r_i = exp(u_i)/a_i and column scaling s_j = exp(v_j).

    Every entry of the scaled matrix has modulus <= 1 and matched entries
    have modulus 1.  If the exponentials would over- or underflow, falls
    back to rescale-by-max (d_i = 1/sqrt(max_j |a_ij|)) and flags it.
    """
    rowmax = _row_maxima(a)
    if np.any(rowmax == 0.0):
        raise StructurallySingularError(np.flatnonzero(rowmax == 0.0))
    exponent = 0.5 * (res.u + res.v - np.log(rowmax))
    if np.all(np.abs(exponent) < _EXP_GUARD):
        d = np.exp(exponent)
        if np.all(np.isfinite(d)) and np.all(d > 0.0):
            return DiagScaling(d)
    return DiagScaling(1.0 / np.sqrt(rowmax), fallback=True)


def cycles_of_permutation(p: Permutation) -> list:
    """Disjoint cycles of i -> forward[i], smallest member first, sorted."""
    n = len(p)
    visited = np.zeros(n, dtype=bool)
    cycles = []
    for i in range(n):
        if visited[i]:
            continue
        cyc = [i]
        visited[i] = True
        j = int(p.forward[i])
        while j != i:
            cyc.append(j)
            visited[j] = True
            j = int(p.forward[j])
        cycles.append(tuple(cyc))
    return cycles


def _lower_entry_lookup(a: SparseSymMatrix):
    rows = np.repeat(np.arange(a.n, dtype=np.int64), np.diff(a.row_starts))
    table = {}
    for r, c, val in zip(rows, a.col_indices, a.values):
        table[(int(r), int(c))] = float(val)
    def lookup(i, j):
        if i < j:
            i, j = j, i
        return table.get((i, j), 0.0)
    return lookup


def split_cycles(cycles, a: SparseSymMatrix) -> list:
    """Breaks matching cycles into Block(1)/Block(2) pieces.

    ``a`` is the scaled matrix: even cycles choose the pairing whose weakest
    pair entry is strongest (tie: the pairing that pairs the cycle's smallest
    member with its successor); odd cycles single out the member with the
    largest scaled diagonal (tie: smallest index).
    """
    entry = _lower_entry_lookup(a)
    blocks = []
    for cyc in cycles:
        k = len(cyc)
        if k == 1:
            blocks.append(Block((cyc[0],)))
        elif k == 2:
            blocks.append(Block((min(cyc), max(cyc))))
        elif k % 2 == 0:
            pair_a = [(cyc[t], cyc[t + 1]) for t in range(0, k, 2)]
            pair_b = [(cyc[(t + 1) % k], cyc[(t + 2) % k]) for t in range(0, k, 2)]
            metric_a = min(abs(entry(x, y)) for x, y in pair_a)
            metric_b = min(abs(entry(x, y)) for x, y in pair_b)
            chosen = pair_a if metric_a >= metric_b else pair_b
            for x, y in chosen:
                blocks.append(Block((min(x, y), max(x, y))))
        else:
            diags = [abs(entry(x, x)) for x in cyc]
            best = max(range(k), key=lambda t: (diags[t], -cyc[t]))
            blocks.append(Block((cyc[best],)))
            for t in range(1, k, 2):
                x = cyc[(best + t) % k]
                y = cyc[(best + t + 1) % k]
                blocks.append(Block((min(x, y), max(x, y))))
    return blocks


def build_symmetric_permutation(blocks, n: int) -> Permutation:
    """Permutation placing each block's members consecutively, blocks in
    ascending order of their smallest member."""
    seen = np.zeros(n, dtype=bool)
    forward = np.empty(n, dtype=np.int64)
    pos = 0
    for blk in sorted(blocks, key=lambda b: b.members[0]):
        for member in blk.members:
            if seen[member]:
                raise ValueError(f"index {member} appears in more than one block")
            seen[member] = True
            forward[member] = pos
            pos += 1
    if pos != n or not np.all(seen):
        raise ValueError("blocks do not partition the index set")
    return Permutation.from_forward(forward)


def compress_graph(a: SparseSymMatrix, blocks):
    """Collapses each 2x2 block into a supervertex.

    Returns (graph, vertex_map): vertex_map[i] is the supervertex holding
    original index i; supervertices are numbered by ascending smallest
    member.  An edge joins two supervertices when any original cross pair is
    an edge of ``a``; self loops are discarded.
    """
    ordered = sorted(blocks, key=lambda b: b.members[0])
    vmap = np.empty(a.n, dtype=np.int64)
    for sv, blk in enumerate(ordered):
        for member in blk.members:
            vmap[member] = sv
    rows = np.repeat(np.arange(a.n, dtype=np.int64), np.diff(a.row_starts))
    off = rows != a.col_indices
    return AdjGraph.from_edges(len(ordered), vmap[rows[off]], vmap[a.col_indices[off]]), vmap


def expand_ordering(compressed_perm: Permutation, blocks) -> Permutation:
    """Expands a supervertex ordering to original indices.

    Members of each supervertex stay consecutive, internally ascending.
    """
    ordered = sorted(blocks, key=lambda b: b.members[0])
    if len(compressed_perm) != len(ordered):
        raise ValueError("compressed permutation does not match block count")
    forward = np.empty(sum(len(b.members) for b in ordered), dtype=np.int64)
    pos = 0
    for sv in compressed_perm.inverse:
        for member in ordered[sv].members:
            forward[member] = pos
            pos += 1
    return Permutation.from_forward(forward)


def symmetric_matching(a: SparseSymMatrix) -> SymMatchingResult:
    """Full pipeline: log costs, LAP, dual scaling, cycle split, P_S."""
    costs = log_weight_transform(a)
    assignment = solve_lap(costs)
    scaling = scaling_from_duals(assignment, a)
    scaled = _scale(a, scaling)
    row_to_col = Permutation.from_forward(assignment.sigma.inverse)
    cycles = cycles_of_permutation(row_to_col)
    blocks = split_cycles(cycles, scaled)
    p_s = build_symmetric_permutation(blocks, a.n)
    return SymMatchingResult(p_s=p_s, blocks=blocks, scaling=scaling)


def _scale(a: SparseSymMatrix, d: DiagScaling) -> SparseSymMatrix:
    from .sparse import scale_sym
    return scale_sym(a, d)


def fill_reducing_block_ordering(a: SparseSymMatrix, blocks) -> Permutation:
    """Minimum-degree ordering of the compressed block graph, expanded back
    to original indices (block members adjacent)."""
    graph, _ = compress_graph(a, blocks)
    return expand_ordering(min_degree_order(graph), blocks)
