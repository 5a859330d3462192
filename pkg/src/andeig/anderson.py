"""Anderson-model Hamiltonians on the 3D cubic lattice.

Builds the tight-binding operator on an M x M x M grid: unit hopping between
the six nearest neighbors plus random on-site energies (diagonal disorder),
or constant diagonal with random hopping (off-diagonal disorder).  Boundary
conditions are periodic or hard-wall.  All randomness comes from the
counter-based generator in :mod:`andeig.rng`, so a configuration determines
the matrix bit-for-bit.

Draw order, fixed for seed portability: diagonal entries use counters
0..n-1 in linear site order; off-diagonal entries use counters 0..nnz-1 in
ascending (row, col) order of the lower triangle.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import rng
from .sparse import DenseVector, SparseSymMatrix


class Boundary(enum.Enum):
    PERIODIC = "periodic"
    HARD_WALL = "hardwall"


class Disorder(enum.Enum):
    DIAGONAL = "diagonal"
    OFF_DIAGONAL = "offdiagonal"


#: Diagonal shift of the off-diagonal disorder model at its localization
#: transition; overridable per configuration.
OFF_DIAGONAL_SHIFT_DEFAULT = 1.28


@dataclass(frozen=True)
class AndersonConfig:
    m: int
    w: float = 16.5
    boundary: Boundary = Boundary.PERIODIC
    disorder: Disorder = Disorder.DIAGONAL
    shift: float = OFF_DIAGONAL_SHIFT_DEFAULT
    seed: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("grid edge length m must be >= 1")
        if self.boundary is Boundary.PERIODIC and self.m < 3:
            # m < 3 would wrap both neighbors of a site onto the same site
            raise ValueError("periodic boundaries need m >= 3")
        if self.w < 0:
            raise ValueError("disorder strength w must be >= 0")
        if self.m ** 3 > np.iinfo(np.int64).max:
            raise ValueError("grid too large for the index type")

    @property
    def n(self) -> int:
        return self.m ** 3


def site_index(i: int, j: int, k: int, m: int) -> int:
    """Linear index of 1-based grid coordinates; k is most significant."""
    if not (1 <= i <= m and 1 <= j <= m and 1 <= k <= m):
        raise ValueError(f"coordinates ({i},{j},{k}) out of range 1..{m}")
    return (k - 1) * m * m + (j - 1) * m + (i - 1)


def site_coords(idx: int, m: int) -> tuple[int, int, int]:
    """Inverse of site_index."""
    if not (0 <= idx < m ** 3):
        raise ValueError(f"linear index {idx} out of range")
    k, rem = divmod(idx, m * m)
    j, i = divmod(rem, m)
    return (i + 1, j + 1, k + 1)


def _neighbor_edges(m: int, boundary: Boundary) -> tuple[np.ndarray, np.ndarray]:
    """Unordered neighbor pairs (hi, lo) with hi > lo, in (hi, lo) sort order."""
    idx = np.arange(m ** 3, dtype=np.int64)
    ii = idx % m
    jj = (idx // m) % m
    kk = idx // (m * m)
    pairs = []
    for coord, stride in ((ii, 1), (jj, m), (kk, m * m)):
        interior = coord < m - 1
        a = idx[interior]
        pairs.append(np.stack([a + stride, a], axis=1))
        if boundary is Boundary.PERIODIC:
            edge = coord == m - 1
            b = idx[edge]
            wrap = b - (m - 1) * stride
            hi = np.maximum(b, wrap)
            lo = np.minimum(b, wrap)
            pairs.append(np.stack([hi, lo], axis=1))
    allp = np.concatenate(pairs, axis=0)
    order = np.lexsort((allp[:, 1], allp[:, 0]))
    allp = allp[order]
    return allp[:, 0], allp[:, 1]


def build_anderson(cfg: AndersonConfig) -> SparseSymMatrix:
    """Constructs the Hamiltonian matrix for a configuration."""
    n = cfg.n
    hi, lo = _neighbor_edges(cfg.m, cfg.boundary)
    if cfg.disorder is Disorder.DIAGONAL:
        diag = rng.uniform(cfg.seed, n, -cfg.w / 2.0, cfg.w / 2.0)
        offv = np.ones(len(hi))
    else:
        diag = np.full(n, float(cfg.shift))
        offv = rng.uniform(cfg.seed, len(hi), -0.5, 0.5)
    didx = np.arange(n, dtype=np.int64)
    rows = np.concatenate([didx, hi])
    cols = np.concatenate([didx, lo])
    vals = np.concatenate([diag, offv])
    return SparseSymMatrix.from_coo(n, rows, cols, vals)


def wavefunction_probabilities(x: DenseVector) -> np.ndarray:
    """Site probabilities |x_j|^2 of the normalized vector; sums to 1."""
    x = np.asarray(x, dtype=np.float64)
    s = float(np.dot(x, x))
    if s == 0.0:
        raise ValueError("zero vector has no probability distribution")
    return (x * x) / s


def periodic_clean_spectrum(m: int) -> np.ndarray:
    """Analytic spectrum of the periodic w=0 operator, sorted ascending.

    The clean operator is a circulant tensor; its eigenvalues are
    2(cos(2 pi p / m) + cos(2 pi q / m) + cos(2 pi r / m)) over all integer
    triples 0 <= p, q, r < m, with multiplicities from the enumeration.
    """
    c = 2.0 * np.cos(2.0 * np.pi * np.arange(m) / m)
    vals = (c[:, None, None] + c[None, :, None] + c[None, None, :]).ravel()
    return np.sort(vals)
