"""Sparse symmetric matrix storage, permutation/scaling algebra, and file I/O.

A :class:`SparseSymMatrix` stores only the lower triangle (column <= row) of
a real symmetric matrix in CSR layout.  Every row carries an explicit
diagonal slot, which may hold the value zero; factorization code relies on
being able to read diagonals unconditionally.  All types are immutable after
construction and safe to share across threads.

Vectors are plain 1-D float64 numpy arrays throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import csr_matvec

DenseVector = np.ndarray


class MatrixFormatError(ValueError):
    """Raised for malformed matrix files or invalid matrix construction."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class SparseSymMatrix:
    """Real symmetric matrix stored as its lower triangle in CSR.

    Invariants enforced on construction: column indices within each row are
    strictly increasing and <= the row index; every row ends with an explicit
    diagonal entry; no duplicate positions.
    """

    __slots__ = ("n", "row_starts", "col_indices", "values", "_full_cache")

    def __init__(self, n, row_starts, col_indices, values, _validate=True):
        self.n = int(n)
        self.row_starts = _freeze(np.asarray(row_starts, dtype=np.int64))
        self.col_indices = _freeze(np.asarray(col_indices, dtype=np.int64))
        self.values = _freeze(np.asarray(values, dtype=np.float64))
        self._full_cache = None
        if _validate:
            self._validate()

    def _validate(self):
        n, rs, ci = self.n, self.row_starts, self.col_indices
        if rs.shape != (n + 1,) or rs[0] != 0 or rs[-1] != len(ci):
            raise MatrixFormatError("row_starts inconsistent with entry count")
        if len(ci) != len(self.values):
            raise MatrixFormatError("col_indices and values length mismatch")
        if np.any(np.diff(rs) < 1):
            raise MatrixFormatError("every row needs at least its diagonal entry")
        for r in range(n):
            cols = ci[rs[r]:rs[r + 1]]
            if cols[-1] != r:
                raise MatrixFormatError(f"row {r} lacks an explicit diagonal entry")
            if cols[0] < 0 or np.any(np.diff(cols) <= 0):
                raise MatrixFormatError(f"row {r} columns not strictly increasing in range")
        if not np.all(np.isfinite(self.values)):
            raise MatrixFormatError("matrix values must be finite")

    @classmethod
    def from_coo(cls, n, rows, cols, values) -> "SparseSymMatrix":
        """Builds from COO triples; upper-triangle entries are mirrored.

        Duplicate unordered positions are rejected.  Missing diagonal slots
        are inserted with value 0.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if rows.shape != cols.shape or rows.shape != values.shape:
            raise MatrixFormatError("rows/cols/values must have identical shape")
        if len(rows) and (rows.min() < 0 or cols.min() < 0
                          or rows.max() >= n or cols.max() >= n):
            raise MatrixFormatError("index out of range")
        lo = np.minimum(rows, cols)
        hi = np.maximum(rows, cols)
        # mirror into lower triangle: row = hi, col = lo
        key = hi * n + lo
        order = np.argsort(key, kind="stable")
        key = key[order]
        if len(key) > 1 and np.any(np.diff(key) == 0):
            dup = int(np.flatnonzero(np.diff(key) == 0)[0])
            r, c = divmod(int(key[dup]), n)
            raise MatrixFormatError(f"duplicate entry at ({r}, {c})")
        hi, lo, values = hi[order], lo[order], values[order]
        # insert missing diagonal slots
        have_diag = np.zeros(n, dtype=bool)
        have_diag[hi[hi == lo]] = True
        missing = np.flatnonzero(~have_diag)
        if len(missing):
            hi = np.concatenate([hi, missing])
            lo = np.concatenate([lo, missing])
            values = np.concatenate([values, np.zeros(len(missing))])
            key = hi * n + lo
            order = np.argsort(key, kind="stable")
            hi, lo, values = hi[order], lo[order], values[order]
        row_starts = np.zeros(n + 1, dtype=np.int64)
        np.add.at(row_starts, hi + 1, 1)
        row_starts = np.cumsum(row_starts)
        return cls(n, row_starts, lo, values)

    @classmethod
    def identity(cls, n) -> "SparseSymMatrix":
        return cls.diagonal(np.ones(n))

    @classmethod
    def diagonal(cls, d) -> "SparseSymMatrix":
        d = np.asarray(d, dtype=np.float64)
        n = len(d)
        idx = np.arange(n, dtype=np.int64)
        return cls(n, np.arange(n + 1, dtype=np.int64), idx, d)

    @property
    def nnz_lower(self) -> int:
        return len(self.values)

    def diagonal_values(self) -> np.ndarray:
        """The n diagonal entries (last stored entry of each row)."""
        return self.values[self.row_starts[1:] - 1]

    def full_csr(self):
        """CSR of the full symmetric operator (both triangles), cached."""
        if self._full_cache is None:
            n = self.n
            rs, ci, v = self.row_starts, self.col_indices, self.values
            rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(rs))
            off = ci != rows
            fr = np.concatenate([rows, ci[off]])
            fc = np.concatenate([ci, rows[off]])
            fv = np.concatenate([v, v[off]])
            key = fr * n + fc
            order = np.argsort(key, kind="stable")
            fr, fc, fv = fr[order], fc[order], fv[order]
            starts = np.zeros(n + 1, dtype=np.int64)
            np.add.at(starts, fr + 1, 1)
            starts = np.cumsum(starts)
            self._full_cache = (_freeze(starts), _freeze(fc), _freeze(fv))
        return self._full_cache

    def norm1(self) -> float:
        """Matrix 1-norm (= inf-norm by symmetry)."""
        starts, _, vals = self.full_csr()
        if self.n == 0:
            return 0.0
        return float(np.max(np.add.reduceat(np.abs(vals), starts[:-1])))

    def __repr__(self):
        return f"SparseSymMatrix(n={self.n}, nnz_lower={self.nnz_lower})"


@dataclass(frozen=True)
class Permutation:
    """Bijection on {0..n-1}; forward[i] is the image of index i."""

    forward: np.ndarray
    inverse: np.ndarray

    @classmethod
    def from_forward(cls, forward) -> "Permutation":
        forward = np.asarray(forward, dtype=np.int64)
        n = len(forward)
        inverse = np.empty(n, dtype=np.int64)
        seen = np.zeros(n, dtype=bool)
        if n and (forward.min() < 0 or forward.max() >= n):
            raise ValueError("permutation image out of range")
        seen[forward] = True
        if not np.all(seen):
            raise ValueError("forward array is not a bijection")
        inverse[forward] = np.arange(n, dtype=np.int64)
        return cls(_freeze(forward), _freeze(inverse))

    @classmethod
    def identity(cls, n) -> "Permutation":
        idx = np.arange(n, dtype=np.int64)
        return cls(_freeze(idx.copy()), _freeze(idx.copy()))

    def __len__(self):
        return len(self.forward)

    def compose(self, then: "Permutation") -> "Permutation":
        """Permutation equal to applying self first, then ``then``."""
        return Permutation.from_forward(then.forward[self.forward])


@dataclass(frozen=True)
class DiagScaling:
    """Strictly positive diagonal scaling; ``fallback`` marks the
    rescale-by-max path taken when matching duals would overflow."""

    d: np.ndarray
    fallback: bool = False

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.float64)
        if not np.all(np.isfinite(d)) or np.any(d <= 0.0):
            raise ValueError("scaling entries must be finite and positive")
        object.__setattr__(self, "d", _freeze(d))

    @classmethod
    def ones(cls, n) -> "DiagScaling":
        return cls(np.ones(n))

    def __len__(self):
        return len(self.d)


def sym_matvec(a: SparseSymMatrix, x: DenseVector) -> DenseVector:
    """y = A x using the full symmetric operator."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.n,):
        raise ValueError(f"dimension mismatch: matrix n={a.n}, vector {x.shape}")
    starts, cols, vals = a.full_csr()
    y = np.empty(a.n)
    csr_matvec(starts, cols, vals, x, y)
    return y


def permute_sym(a: SparseSymMatrix, p: Permutation) -> SparseSymMatrix:
    """Symmetric permutation: result(i, j) = a(p.inverse[i], p.inverse[j])."""
    if len(p) != a.n:
        raise ValueError("permutation length does not match matrix dimension")
    rs = a.row_starts
    rows = np.repeat(np.arange(a.n, dtype=np.int64), np.diff(rs))
    nr = p.forward[rows]
    nc = p.forward[a.col_indices]
    return SparseSymMatrix.from_coo(a.n, nr, nc, a.values)


def scale_sym(a: SparseSymMatrix, d: DiagScaling) -> SparseSymMatrix:
    """Symmetric scaling: result(i, j) = d_i * a(i, j) * d_j."""
    if len(d) != a.n:
        raise ValueError("scaling length does not match matrix dimension")
    rows = np.repeat(np.arange(a.n, dtype=np.int64), np.diff(a.row_starts))
    vals = a.values * d.d[rows] * d.d[a.col_indices]
    return SparseSymMatrix(a.n, a.row_starts, a.col_indices, vals, _validate=False)


DENSE_CAP_DEFAULT = 20000


def to_dense(a: SparseSymMatrix, cap: int = DENSE_CAP_DEFAULT) -> np.ndarray:
    """Full dense symmetric array; guarded by an explicit size cap."""
    if a.n > cap:
        raise ValueError(f"dense conversion refused: n={a.n} exceeds cap={cap}")
    out = np.zeros((a.n, a.n))
    rows = np.repeat(np.arange(a.n, dtype=np.int64), np.diff(a.row_starts))
    out[rows, a.col_indices] = a.values
    out[a.col_indices, rows] = a.values
    return out


_MM_HEADER = "%%MatrixMarket matrix coordinate real symmetric"


def write_matrix_market(a: SparseSymMatrix, path) -> None:
    """Writes the lower triangle in Matrix Market coordinate format.

    Indices are 1-based; values use shortest round-trip decimal so a
    read-back reproduces the matrix bit-exactly.
    """
    rows = np.repeat(np.arange(a.n, dtype=np.int64), np.diff(a.row_starts))
    with open(path, "w", encoding="ascii") as f:
        f.write(_MM_HEADER + "\n")
        f.write(f"{a.n} {a.n} {a.nnz_lower}\n")
        for r, c, v in zip(rows, a.col_indices, a.values):
            f.write(f"{r + 1} {c + 1} {float(v)!r}\n")


def read_matrix_market(path) -> SparseSymMatrix:
    """Reads a coordinate-format real symmetric Matrix Market file."""
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().strip()
        parts = header.lower().split()
        if (len(parts) != 5 or parts[0] != "%%matrixmarket" or parts[1] != "matrix"
                or parts[2] != "coordinate"):
            raise MatrixFormatError(f"malformed Matrix Market header: {header!r}")
        if parts[3] != "real":
            raise MatrixFormatError(f"unsupported field {parts[3]!r}; need real")
        if parts[4] != "symmetric":
            raise MatrixFormatError(
                f"matrix declared {parts[4]!r}; only symmetric storage is accepted")
        line = f.readline()
        while line.startswith("%"):
            line = f.readline()
        sizes = line.split()
        if len(sizes) != 3:
            raise MatrixFormatError("malformed size line")
        nrows, ncols, nnz = (int(s) for s in sizes)
        if nrows != ncols:
            raise MatrixFormatError("symmetric matrix must be square")
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        k = 0
        for line in f:
            line = line.strip()
            if not line or line.startswith("%"):
                continue
            fields = line.split()
            if len(fields) != 3:
                raise MatrixFormatError(f"malformed entry line: {line!r}")
            if k >= nnz:
                raise MatrixFormatError("more entries than declared")
            r, c = int(fields[0]) - 1, int(fields[1]) - 1
            if not (0 <= r < nrows and 0 <= c < ncols):
                raise MatrixFormatError(f"index out of range on line: {line!r}")
            rows[k], cols[k], vals[k] = r, c, float(fields[2])
            k += 1
        if k != nnz:
            raise MatrixFormatError(f"declared {nnz} entries, found {k}")
    return SparseSymMatrix.from_coo(nrows, rows, cols, vals)
