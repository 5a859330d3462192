"""Multilevel incomplete LDL^T factorization with inverse-based pivoting.

Each level: (i) scale and reorder the system so that matched entries sit in
1x1/2x2 diagonal blocks and fill stays low, (ii) run an incomplete Crout
factorization choosing 1x1 or 2x2 pivots by block diagonal dominance and
postponing any pivot that would push the estimated norm of the inverse
triangular factor past a bound kappa, (iii) form the Schur complement of the
postponed pivots explicitly and recurse on it.  The recursion ends in a dense
Bunch-Kaufman factorization.

Dropping: an entry of a new L column is discarded when its modulus is below
epsilon/kappa; Schur-complement entries use the same rule.  The optional
a-posteriori "aggressive" pass additionally removes l_ij with
|l_ij| <= tau / (nu_i * fill_j), where nu_i estimates the norm of column i of
L^{-1} and fill_j counts the subdiagonal entries of column j.

The off-diagonal coupling between accepted and postponed pivots is not stored
as part of L; the preconditioner applies it implicitly through the original
(scaled, permuted) matrix block, i.e. as A21 (L11 D11 L11^T)^{-1}.

Operator algebra of apply: each level factors PD A DP^T, with D the level's
diagonal scaling and P the level's combined permutation, so a solve conjugates
the recursive block solve by those transforms in reverse order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import matching as matching_mod
from ._kernels import (
    block_diag_solve,
    csr_matvec,
    csr_matvec_transpose,
    greedy_inverse_colnorms,
    unit_lower_solve,
    unit_lower_solve_transpose,
)
from .dense import SingularMatrixError, sym_indef_factor, sym_indef_nnz, sym_indef_solve
from .ordering import AdjGraph, min_degree_order
from .sparse import (
    DiagScaling,
    Permutation,
    SparseSymMatrix,
    permute_sym,
    scale_sym,
    to_dense,
)


class FactorBreakdownError(RuntimeError):
    """The factorization cannot make progress (try a larger kappa)."""


@dataclass(frozen=True)
class FactorParams:
    kappa: float = 5.0
    epsilon: float | None = None  # None resolves to 1/sqrt(n) of the input matrix
    tau: float = 0.1
    max_levels: int = 25
    small_block_cutoff: int = 200
    enable_matching: bool = True
    enable_aggressive_drop: bool = True
    # optional external elimination order of the first level's original
    # indices (array of indices in elimination order); 2x2 matched blocks are
    # kept adjacent by ordering them at their earliest member
    ordering_override: np.ndarray | None = None

    def __post_init__(self):
        if self.kappa < 1.0:
            raise ValueError("kappa must be >= 1")
        if self.epsilon is not None and self.epsilon < 0.0:
            raise ValueError("epsilon must be >= 0")
        if not (0.0 < self.tau < 1.0):
            raise ValueError("tau must lie in (0, 1)")
        if self.max_levels < 1 or self.small_block_cutoff < 1:
            raise ValueError("max_levels and small_block_cutoff must be positive")


class PivotChoice(enum.Enum):
    ONE_BY_ONE = 1
    TWO_BY_TWO = 2
    POSTPONE = 0


def pivot_d_values(sc: np.ndarray) -> tuple[float, float]:
    """Block-diagonal-dominance measures of the two leading columns.

    d1 sums |s_j1|/|s_11| over j > 1; d2 sums the row norms of
    (s_j1, s_j2) B^{-1} over j > 2 with B the leading symmetric 2x2 block.
    Unusable pivots (zero s_11, singular B, missing second column) give +inf.
    """
    sc = np.asarray(sc, dtype=np.float64)
    m = sc.shape[0]
    if m == 0:
        raise ValueError("empty block")
    s11 = sc[0, 0]
    tail1 = sc[1:, 0]
    if s11 == 0.0:
        d1 = math.inf
    else:
        d1 = float(np.sum(np.abs(tail1)) / abs(s11))
    if m < 2:
        return d1, math.inf
    b = np.array([[sc[0, 0], sc[1, 0]], [sc[1, 0], sc[1, 1]]])
    det = b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]
    if abs(det) < 1e-300:
        return d1, math.inf
    binv = np.array([[b[1, 1], -b[0, 1]], [-b[1, 0], b[0, 0]]]) / det
    pairs = sc[2:, 0:2] @ binv
    d2 = float(np.sum(np.sqrt(np.sum(pairs * pairs, axis=1))))
    return d1, d2


def choose_pivot(sc: np.ndarray) -> tuple[PivotChoice, float, float]:
    """Selects the update type for the leading columns of a Schur block.

    A 2x2 update is taken only if d2 < d1; if neither measure is finite the
    candidate must be postponed.  The kappa-based postponement of otherwise
    acceptable pivots happens inside the factorization, where the inverse-norm
    estimator state lives.
    """
    d1, d2 = pivot_d_values(sc)
    if d2 < d1:
        return PivotChoice.TWO_BY_TWO, d1, d2
    if math.isinf(d1):
        return PivotChoice.POSTPONE, d1, d2
    return PivotChoice.ONE_BY_ONE, d1, d2


class InvNormEstimator:
    """Greedy lower estimate of the inf-norm of the inverse of unit lower L.

    Solves L y = b choosing b_k in {+1, -1} to maximize |y_k| as columns
    arrive; ``estimate`` is max |y_k| over appended pivot rows (>= 1, monotone
    nondecreasing).  ``t`` carries the running partial dots for rows not yet
    appended, so the effect of accepting a candidate column on any future row
    is available before committing (the lookahead used for kappa tests).
    """

    def __init__(self, dim: int):
        self.t = np.zeros(dim)
        self.y = np.zeros(dim)
        self.estimate = 1.0

    def _pivot_y(self, row: int) -> float:
        t = self.t[row]
        return (-1.0 - t) if t > 0.0 else (1.0 - t)

    def lookahead(self, pivot_rows, cols) -> float:
        """Estimate after hypothetically appending the block column.

        ``cols`` is a list of (rows, vals) scalar columns aligned with
        pivot_rows.  Includes the effect on every touched pending row.
        """
        est = self.estimate
        ys = []
        for r in pivot_rows:
            y = self._pivot_y(r)
            ys.append(y)
            est = max(est, abs(y))
        delta: dict[int, float] = {}
        for y, (rows, vals) in zip(ys, cols):
            for r, v in zip(rows, vals):
                delta[int(r)] = delta.get(int(r), 0.0) + float(v) * y
        for r, dv in delta.items():
            est = max(est, 1.0 + abs(self.t[r] + dv))
        return est

    def append(self, pivot_rows, cols) -> float:
        """Commits the block column; returns the updated estimate."""
        ys = []
        for r in pivot_rows:
            y = self._pivot_y(r)
            self.y[r] = y
            ys.append(y)
            self.estimate = max(self.estimate, abs(y))
        for y, (rows, vals) in zip(ys, cols):
            if len(rows):
                self.t[rows] += vals * y
        return self.estimate


def estimate_inverse_norm(est: InvNormEstimator, pivot_rows, cols) -> float:
    """Appends a new block column of L to the running estimate."""
    return est.append(pivot_rows, cols)


@dataclass
class LevelFactor:
    """One level of the multilevel factorization, in level-local indices."""

    dim: int
    accepted_size: int
    schur_dim: int
    scaling: DiagScaling
    perm: Permutation  # level index -> position (accepted block first)
    l_colptr: np.ndarray
    l_rows: np.ndarray
    l_vals: np.ndarray
    d_sizes: np.ndarray
    d_vals: np.ndarray
    a21_indptr: np.ndarray
    a21_cols: np.ndarray
    a21_vals: np.ndarray
    inverse_norm_estimate: float
    dropped_mass: float = 0.0

    @property
    def nnz_factor(self) -> int:
        """Stored factor entries: strict-lower L plus packed D blocks."""
        return int(len(self.l_vals) + len(self.d_vals))


@dataclass
class MultilevelFactor:
    n: int
    levels: list
    final_dense: tuple | None  # (lf, piv) from sym_indef_factor
    final_dim: int
    nnz_a: int
    nnz_factor: int
    params: FactorParams
    epsilon: float

    @property
    def fill_ratio(self) -> float:
        return self.nnz_factor / max(1, self.nnz_a)

    @property
    def num_levels(self) -> int:
        return len(self.levels) + (1 if self.final_dim > 0 else 0)

    def stats_report(self) -> str:
        lines = [
            f"dimension            {self.n}",
            f"levels               {self.num_levels}",
            f"nnz(A)               {self.nnz_a}",
            f"nnz(factor)          {self.nnz_factor}",
            f"fill ratio           {self.fill_ratio:.3f}",
            f"epsilon              {self.epsilon:.3e}",
            f"kappa                {self.params.kappa:g}",
        ]
        for i, lev in enumerate(self.levels):
            lines.append(
                f"level {i}: dim {lev.dim}  accepted {lev.accepted_size}  "
                f"postponed {lev.schur_dim}  nnz {lev.nnz_factor}  "
                f"inv-norm est {lev.inverse_norm_estimate:.3f}  "
                f"dropped {lev.dropped_mass:.3e}")
        if self.final_dim:
            lines.append(f"final dense block: dim {self.final_dim}")
        return "\n".join(lines)


def _equilibration_scaling(a: SparseSymMatrix) -> DiagScaling:
    starts, cols, vals = a.full_csr()
    rowmax = np.zeros(a.n)
    absv = np.abs(vals)
    for i in range(a.n):
        s, e = starts[i], starts[i + 1]
        if e > s:
            rowmax[i] = absv[s:e].max()
    rowmax[rowmax == 0.0] = 1.0
    return DiagScaling(1.0 / np.sqrt(rowmax))


def preprocess_level(a: SparseSymMatrix, params: FactorParams,
                     ordering_override: np.ndarray | None = None):
    """Scales and reorders one level.

    Returns (a_tilde, scaling, perm, blocks): with matching enabled the
    scaling comes from the assignment duals and the permutation places
    matched 2x2 blocks adjacently inside a fill-reducing order of the
    compressed block graph; otherwise a max-row equilibration and a
    minimum-degree order of the raw graph are used.  An explicit elimination
    order (array of original indices) replaces the internal fill ordering,
    with matched blocks pulled together at their earliest member.
    """
    if params.enable_matching:
        result = matching_mod.symmetric_matching(a)
        scaling = result.scaling
        blocks = result.blocks
        if ordering_override is not None:
            perm = _override_block_ordering(a.n, blocks, ordering_override)
        else:
            perm = matching_mod.fill_reducing_block_ordering(a, blocks)
    else:
        scaling = _equilibration_scaling(a)
        blocks = [matching_mod.Block((i,)) for i in range(a.n)]
        if ordering_override is not None:
            position = np.empty(a.n, dtype=np.int64)
            position[np.asarray(ordering_override, dtype=np.int64)] = \
                np.arange(a.n, dtype=np.int64)
            perm = Permutation.from_forward(position)
        else:
            perm = min_degree_order(AdjGraph.from_matrix(a))
    a_tilde = permute_sym(scale_sym(a, scaling), perm)
    return a_tilde, scaling, perm, blocks


def _override_block_ordering(n, blocks, order) -> Permutation:
    order = np.asarray(order, dtype=np.int64)
    if sorted(order.tolist()) != list(range(n)):
        raise ValueError("ordering override must list every index exactly once")
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n, dtype=np.int64)
    ordered_blocks = sorted(blocks, key=lambda b: min(rank[m] for m in b.members))
    forward = np.empty(n, dtype=np.int64)
    pos = 0
    for blk in ordered_blocks:
        for member in blk.members:
            forward[member] = pos
            pos += 1
    return Permutation.from_forward(forward)


_PENDING, _ELIMINATED, _POSTPONED = 0, 1, 2


class _BlockColumn:
    __slots__ = ("cols", "rows", "vals", "d", "ptr", "plist_rows", "plist_vals")

    def __init__(self, cols, rows, vals, d):
        self.cols = cols          # tuple of 1 or 2 pivot indices (a-tilde order)
        self.rows = rows          # int64 array, ascending, uneliminated at creation
        self.vals = vals          # (len(rows), len(cols)) float64
        self.d = d                # (1,) or (3,) packed symmetric pivot block
        self.ptr = 0
        self.plist_rows = []      # coupling rows moved out as they are postponed
        self.plist_vals = []


class _CoreResult:
    def __init__(self):
        self.elim_order = []      # a-tilde indices in elimination order
        self.postponed = []       # a-tilde indices, stable
        self.block_cols = []      # list of _BlockColumn
        self.estimate = 1.0
        self.status = None
        self.elim_pos = None


def _factor_core(at: SparseSymMatrix, params: FactorParams, eps: float) -> _CoreResult:
    """Incomplete Crout LDL^T of a preprocessed matrix, postponing pivots
    that fail the inverse-norm bound.  Works entirely in a-tilde indices."""
    n = at.n
    drop_tol = eps / params.kappa
    kappa = params.kappa
    rs, ci, vv = at.row_starts, at.col_indices, at.values
    # lower-triangle columns of a-tilde (rows >= col), sorted by (col, row)
    rows_all = np.repeat(np.arange(n, dtype=np.int64), np.diff(rs))
    order = np.lexsort((rows_all, ci))
    colsorted_rows = rows_all[order]
    colsorted_vals = vv[order]
    col_starts = np.zeros(n + 1, dtype=np.int64)
    np.add.at(col_starts, ci + 1, 1)
    col_starts = np.cumsum(col_starts)

    status = np.zeros(n, dtype=np.int8)
    elim_pos = np.full(n, -1, dtype=np.int64)
    rowlist: list[list[int]] = [[] for _ in range(n)]
    res = _CoreResult()
    est = InvNormEstimator(n)
    w1 = np.zeros(n)
    w2 = np.zeros(n)

    def advance(bid: int):
        b = res.block_cols[bid]
        rows = b.rows
        while b.ptr < len(rows):
            r = rows[b.ptr]
            st = status[r]
            if st == _PENDING:
                rowlist[r].append(bid)
                return
            if st == _POSTPONED:
                b.plist_rows.append(int(r))
                b.plist_vals.append(b.vals[b.ptr])
            b.ptr += 1

    def row_value(bid: int, r: int):
        """Value row r carries in block column bid, or None."""
        b = res.block_cols[bid]
        i = np.searchsorted(b.rows, r)
        if i < len(b.rows) and b.rows[i] == r:
            return b.vals[i]
        return None

    def gather(k: int, contributors, w):
        """Fills workspace w with column k of the Schur complement over the
        uneliminated rows; returns the support indices."""
        parts = []
        s, e = col_starts[k], col_starts[k + 1]
        base_rows = colsorted_rows[s:e]
        w[base_rows] = colsorted_vals[s:e]
        parts.append(base_rows)
        # symmetric partners with smaller index that were postponed earlier
        for p in range(rs[k], rs[k + 1]):
            c = ci[p]
            if c != k and status[c] == _POSTPONED:
                w[c] = vv[p]
                parts.append(np.array([c], dtype=np.int64))
        for bid in contributors:
            b = res.block_cols[bid]
            lk = row_value(bid, k)
            if lk is None:
                continue
            coeff = _dmul(b.d, lk)
            sl_rows = b.rows[b.ptr:]
            if len(sl_rows):
                w[sl_rows] -= b.vals[b.ptr:] @ coeff
                parts.append(sl_rows)
            if b.plist_rows:
                pr = np.asarray(b.plist_rows, dtype=np.int64)
                w[pr] -= np.vstack(b.plist_vals) @ coeff
                parts.append(pr)
        return np.unique(np.concatenate(parts)) if parts else np.empty(0, np.int64)

    pos = 0
    while pos < n:
        k = pos
        if status[k] != _PENDING:
            pos += 1
            continue
        k2 = -1
        for j in range(k + 1, n):
            if status[j] == _PENDING:
                k2 = j
                break
        contrib1 = list(rowlist[k])
        sup1 = gather(k, contrib1, w1)
        s11 = w1[k]
        tail1 = sup1[(sup1 != k)]
        d1 = math.inf if s11 == 0.0 else float(np.sum(np.abs(w1[tail1]))) / abs(s11)

        use_two = False
        d2 = math.inf
        binv = None
        sup2 = None
        if k2 >= 0:
            contrib2 = [b for b in rowlist[k2] if b not in contrib1]
            sup2 = gather(k2, contrib1 + contrib2, w2)
            s12 = w1[k2]  # equals w2[k] by symmetry
            s22 = w2[k2]
            det = s11 * s22 - s12 * s12
            if abs(det) >= 1e-300:
                binv = np.array([[s22, -s12], [-s12, s11]]) / det
                union = np.union1d(tail1, sup2[(sup2 != k) & (sup2 != k2)])
                pairs = np.stack([w1[union], w2[union]], axis=1) @ binv
                d2 = float(np.sum(np.sqrt(np.sum(pairs * pairs, axis=1))))
            use_two = d2 < d1

        accepted = False
        if use_two:
            union = np.union1d(sup1, sup2)
            union = union[(union != k) & (union != k2)]
            lvals = np.stack([w1[union], w2[union]], axis=1) @ binv
            if np.all(np.isfinite(lvals)):
                keep = np.max(np.abs(lvals), axis=1) >= drop_tol
                rows_new = union[keep]
                vals_new = lvals[keep]
                cols = [(rows_new, vals_new[:, 0]), (rows_new, vals_new[:, 1])]
                if est.lookahead((k, k2), cols) <= kappa:
                    dpack = np.array([s11, s12, s22])
                    blk = _BlockColumn((k, k2), rows_new, vals_new, dpack)
                    est.append((k, k2), cols)
                    res.block_cols.append(blk)
                    status[k] = status[k2] = _ELIMINATED
                    elim_pos[k] = len(res.elim_order)
                    elim_pos[k2] = len(res.elim_order) + 1
                    res.elim_order.extend([k, k2])
                    accepted = True
                    consumed = (k, k2)
        elif not math.isinf(d1):
            lv = w1[tail1] / s11
            if np.all(np.isfinite(lv)):
                keep = np.abs(lv) >= drop_tol
                rows_new = tail1[keep]
                vals_new = lv[keep]
                cols = [(rows_new, vals_new)]
                if est.lookahead((k,), cols) <= kappa:
                    blk = _BlockColumn((k,), rows_new, vals_new.reshape(-1, 1),
                                       np.array([s11]))
                    est.append((k,), cols)
                    res.block_cols.append(blk)
                    status[k] = _ELIMINATED
                    elim_pos[k] = len(res.elim_order)
                    res.elim_order.append(k)
                    accepted = True
                    consumed = (k,)

        # reset workspaces
        w1[sup1] = 0.0
        if sup2 is not None:
            w2[sup2] = 0.0
            w1[sup2] = 0.0

        if not accepted:
            consumed = (k, k2) if use_two else (k,)
            for c in consumed:
                if c >= 0:
                    status[c] = _POSTPONED
                    res.postponed.append(int(c))
        # advance every contributor whose pointer rested on a consumed row,
        # then register freshly created columns
        touched = set()
        for c in consumed:
            if c >= 0:
                touched.update(rowlist[c])
                rowlist[c] = []
        for bid in touched:
            b = res.block_cols[bid]
            rws = b.rows
            while b.ptr < len(rws) and status[rws[b.ptr]] != _PENDING:
                if status[rws[b.ptr]] == _POSTPONED:
                    b.plist_rows.append(int(rws[b.ptr]))
                    b.plist_vals.append(b.vals[b.ptr])
                b.ptr += 1
            if b.ptr < len(rws):
                rowlist[rws[b.ptr]].append(bid)
        if accepted:
            bid = len(res.block_cols) - 1
            advance(bid)
        pos = k if status[k] == _PENDING else pos + 1

    res.estimate = est.estimate
    res.status = status
    res.elim_pos = elim_pos
    return res


def _dmul(dpack: np.ndarray, lk: np.ndarray) -> np.ndarray:
    """D_block @ lk for packed 1x1 (a,) or 2x2 (a, b, d) blocks."""
    if len(dpack) == 1:
        return dpack * lk
    a, b, d = dpack
    return np.array([a * lk[0] + b * lk[1], b * lk[0] + d * lk[1]])


def _coo_sum_lower(n, rows, cols, vals, drop_tol) -> SparseSymMatrix:
    """Sums duplicate COO entries, drops small off-diagonals, keeps diagonals."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    key = rows * n + cols
    uniq, inv = np.unique(key, return_inverse=True)
    acc = np.bincount(inv, weights=vals, minlength=len(uniq))
    r = uniq // n
    c = uniq % n
    keep = (np.abs(acc) >= drop_tol) | (r == c)
    r, c, acc = r[keep], c[keep], acc[keep]
    # make sure every diagonal slot exists
    have = np.zeros(n, dtype=bool)
    have[r[r == c]] = True
    miss = np.flatnonzero(~have)
    if len(miss):
        r = np.concatenate([r, miss])
        c = np.concatenate([c, miss])
        acc = np.concatenate([acc, np.zeros(len(miss))])
    return SparseSymMatrix.from_coo(n, r, c, acc)


def _schur_complement(at: SparseSymMatrix, core: _CoreResult, drop_tol) -> SparseSymMatrix:
    postponed = np.asarray(core.postponed, dtype=np.int64)
    np_post = len(postponed)
    if np_post == 0:
        return SparseSymMatrix.from_coo(0, [], [], [])
    pmap = np.full(at.n, -1, dtype=np.int64)
    pmap[postponed] = np.arange(np_post, dtype=np.int64)
    coo_r, coo_c, coo_v = [], [], []
    rows_all = np.repeat(np.arange(at.n, dtype=np.int64), np.diff(at.row_starts))
    sel = (pmap[rows_all] >= 0) & (pmap[at.col_indices] >= 0)
    base_r = pmap[rows_all[sel]]
    base_c = pmap[at.col_indices[sel]]
    coo_r.append(np.maximum(base_r, base_c))
    coo_c.append(np.minimum(base_r, base_c))
    coo_v.append(at.values[sel])
    for b in core.block_cols:
        row_parts = []
        val_parts = []
        if b.plist_rows:
            row_parts.append(np.asarray(b.plist_rows, dtype=np.int64))
            val_parts.append(np.vstack(b.plist_vals))
        tailr = b.rows[b.ptr:]
        tail_mask = core.status[tailr] == _POSTPONED
        if np.any(tail_mask):
            row_parts.append(tailr[tail_mask])
            val_parts.append(b.vals[b.ptr:][tail_mask])
        if not row_parts:
            continue
        pr = pmap[np.concatenate(row_parts)]
        wmat = np.vstack(val_parts)  # (m, bs)
        contrib = wmat @ _dmat(b.d) @ wmat.T
        ii, jj = np.meshgrid(pr, pr, indexing="ij")
        mask = ii >= jj
        coo_r.append(ii[mask])
        coo_c.append(jj[mask])
        coo_v.append(-contrib[mask])
    return _coo_sum_lower(np_post, np.concatenate(coo_r), np.concatenate(coo_c),
                          np.concatenate(coo_v), drop_tol)


def _dmat(dpack: np.ndarray) -> np.ndarray:
    if len(dpack) == 1:
        return dpack.reshape(1, 1)
    a, b, d = dpack
    return np.array([[a, b], [b, d]])


def _pack_level(at, scaling, perm, core: _CoreResult, s22_dim) -> LevelFactor:
    """Assembles the packed arrays of a finished level (final Q applied)."""
    n = at.n
    n_acc = len(core.elim_order)
    # Q: a-tilde index -> final position (accepted elimination order first,
    # postponed in stable order after)
    qforward = np.empty(n, dtype=np.int64)
    for p, i in enumerate(core.elim_order):
        qforward[i] = p
    for p, i in enumerate(core.postponed):
        qforward[i] = n_acc + p
    q = Permutation.from_forward(qforward)
    total_perm = perm.compose(q)

    # L11 in packed CSC over accepted indices
    colptr = np.zeros(n_acc + 1, dtype=np.int64)
    col_entries: list[tuple[np.ndarray, np.ndarray]] = [None] * n_acc
    for b in core.block_cols:
        for t, cidx in enumerate(b.cols):
            jpos = core.elim_pos[cidx]
            mask = core.status[b.rows] == _ELIMINATED
            rr = qforward[b.rows[mask]]
            vvv = b.vals[mask][:, t]
            nz = vvv != 0.0
            rr, vvv = rr[nz], vvv[nz]
            order = np.argsort(rr)
            col_entries[jpos] = (rr[order], vvv[order])
            colptr[jpos + 1] = len(rr)
    colptr = np.cumsum(colptr)
    l_rows = np.empty(colptr[-1], dtype=np.int64)
    l_vals = np.empty(colptr[-1])
    for j in range(n_acc):
        rr, vvv = col_entries[j]
        l_rows[colptr[j]:colptr[j + 1]] = rr
        l_vals[colptr[j]:colptr[j + 1]] = vvv

    d_sizes = np.array([len(b.cols) for b in core.block_cols], dtype=np.int8)
    d_vals = np.concatenate([b.d for b in core.block_cols]) if core.block_cols \
        else np.empty(0)

    # coupling block A21 = a-tilde[postponed, accepted] in final coordinates
    rows_all = np.repeat(np.arange(n, dtype=np.int64), np.diff(at.row_starts))
    cols_all = at.col_indices
    st = core.status
    m1 = (st[rows_all] == _POSTPONED) & (st[cols_all] == _ELIMINATED)
    m2 = (st[cols_all] == _POSTPONED) & (st[rows_all] == _ELIMINATED)
    a21r = np.concatenate([qforward[rows_all[m1]], qforward[cols_all[m2]]]) - n_acc
    a21c = np.concatenate([qforward[cols_all[m1]], qforward[rows_all[m2]]])
    a21v = np.concatenate([at.values[m1], at.values[m2]])
    order = np.lexsort((a21c, a21r))
    a21r, a21c, a21v = a21r[order], a21c[order], a21v[order]
    indptr = np.zeros(s22_dim + 1, dtype=np.int64)
    np.add.at(indptr, a21r + 1, 1)
    indptr = np.cumsum(indptr)

    return LevelFactor(
        dim=n, accepted_size=n_acc, schur_dim=s22_dim,
        scaling=scaling, perm=total_perm,
        l_colptr=colptr, l_rows=l_rows, l_vals=l_vals,
        d_sizes=d_sizes, d_vals=d_vals,
        a21_indptr=indptr, a21_cols=a21c, a21_vals=a21v,
        inverse_norm_estimate=core.estimate)


def factor_level(a_tilde: SparseSymMatrix, params: FactorParams,
                 epsilon: float | None = None):
    """Single-level incomplete factorization of an already preprocessed matrix.

    Returns (LevelFactor, s22) with identity scaling/permutation metadata;
    ``factorize`` composes the preprocessing transforms around this.
    """
    eps = (1.0 / math.sqrt(max(a_tilde.n, 1))) if epsilon is None else epsilon
    core = _factor_core(a_tilde, params, eps)
    if not core.elim_order:
        raise FactorBreakdownError(
            "no pivot accepted at this level; consider a larger kappa")
    s22 = _schur_complement(a_tilde, core, eps / params.kappa)
    lev = _pack_level(a_tilde, DiagScaling.ones(a_tilde.n),
                      Permutation.identity(a_tilde.n), core, s22.n)
    return lev, s22


def aggressive_drop(level: LevelFactor, tau: float) -> LevelFactor:
    """A-posteriori sparsification of the level's triangular factor.

    Removes l_ij with |l_ij| <= tau / (nu_i * fill_j) where nu_i is the
    greedy estimate of the norm of column i of L^{-1} and fill_j the count of
    subdiagonal nonzeros of column j.  Records the dropped absolute mass.
    """
    n_acc = level.accepted_size
    if n_acc == 0 or len(level.l_vals) == 0:
        return level
    nu = greedy_inverse_colnorms(level.l_colptr, level.l_rows, level.l_vals)
    fill = np.maximum(np.diff(level.l_colptr), 1)
    colidx = np.repeat(np.arange(n_acc, dtype=np.int64), np.diff(level.l_colptr))
    thresh = tau / (nu[level.l_rows] * fill[colidx])
    keep = np.abs(level.l_vals) > thresh
    dropped = float(np.sum(np.abs(level.l_vals[~keep])))
    colptr = np.zeros(n_acc + 1, dtype=np.int64)
    np.add.at(colptr, colidx[keep] + 1, 1)
    level.l_colptr = np.cumsum(colptr)
    level.l_rows = level.l_rows[keep]
    level.l_vals = level.l_vals[keep]
    level.dropped_mass = dropped
    return level


def factorize(a: SparseSymMatrix, params: FactorParams | None = None) -> MultilevelFactor:
    """Multilevel incomplete LDL^T of a sparse symmetric matrix."""
    if params is None:
        params = FactorParams()
    if a.n < 1:
        raise ValueError("matrix must have dimension >= 1")
    eps = params.epsilon if params.epsilon is not None else 1.0 / math.sqrt(a.n)
    drop_tol = eps / params.kappa
    levels = []
    cur = a
    low_progress = 0
    nnz_factor = 0
    while cur.n > params.small_block_cutoff and len(levels) < params.max_levels:
        override = params.ordering_override if not levels else None
        at, scaling, perm, _ = preprocess_level(cur, params, ordering_override=override)
        core = _factor_core(at, params, eps)
        if not core.elim_order:
            raise FactorBreakdownError(
                f"level {len(levels)}: no pivot accepted (dim {cur.n}); "
                "consider a larger kappa")
        if len(core.elim_order) < max(1, cur.n // 100):
            low_progress += 1
            if low_progress >= 2:
                raise FactorBreakdownError(
                    f"level {len(levels)}: accepted under 1% of dimension twice "
                    "in a row; consider a larger kappa")
        else:
            low_progress = 0
        s22 = _schur_complement(at, core, drop_tol)
        lev = _pack_level(at, scaling, perm, core, s22.n)
        if params.enable_aggressive_drop:
            lev = aggressive_drop(lev, params.tau)
        levels.append(lev)
        nnz_factor += lev.nnz_factor
        cur = s22
        if cur.n == 0:
            break
    final_dense = None
    final_dim = cur.n
    if final_dim > 0:
        try:
            lf, piv = sym_indef_factor(to_dense(cur, cap=max(cur.n, 1)))
        except SingularMatrixError as exc:
            raise FactorBreakdownError(f"final dense block is singular: {exc}") from exc
        final_dense = (lf, piv)
        nnz_factor += sym_indef_nnz(lf, piv)
    return MultilevelFactor(
        n=a.n, levels=levels, final_dense=final_dense, final_dim=final_dim,
        nnz_a=a.nnz_lower, nnz_factor=nnz_factor, params=params, epsilon=eps)


def _solve_b11(lev: LevelFactor, r1: np.ndarray) -> np.ndarray:
    x = r1.copy()
    unit_lower_solve(lev.l_colptr, lev.l_rows, lev.l_vals, x)
    block_diag_solve(lev.d_sizes, lev.d_vals, x)
    unit_lower_solve_transpose(lev.l_colptr, lev.l_rows, lev.l_vals, x)
    return x


def _apply_level(f: MultilevelFactor, idx: int, r: np.ndarray) -> np.ndarray:
    if idx == len(f.levels):
        if f.final_dim == 0:
            return r.copy()
        lf, piv = f.final_dense
        return sym_indef_solve(lf, piv, r)
    lev = f.levels[idx]
    w = (lev.scaling.d * r)[lev.perm.inverse]
    na = lev.accepted_size
    r1 = w[:na]
    g = _solve_b11(lev, r1)
    if lev.schur_dim:
        y2 = w[na:].copy()
        tmp = np.empty(lev.schur_dim)
        csr_matvec(lev.a21_indptr, lev.a21_cols, lev.a21_vals, g, tmp)
        y2 -= tmp
        x2 = _apply_level(f, idx + 1, y2)
        u = np.zeros(na)
        csr_matvec_transpose(lev.a21_indptr, lev.a21_cols, lev.a21_vals, x2, u)
        x1 = g - _solve_b11(lev, u)
        z = np.concatenate([x1, x2])
    else:
        z = g
    return z[lev.perm.forward] * lev.scaling.d


def apply_preconditioner(f: MultilevelFactor, r: np.ndarray) -> np.ndarray:
    """z = M^{-1} r for the multilevel factorization viewed as operator M."""
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (f.n,):
        raise ValueError("dimension mismatch")
    return _apply_level(f, 0, r)
