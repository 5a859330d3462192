"""Shared helpers for the test suite."""

import numpy as np
import pytest

from andeig import SparseSymMatrix


def random_sparse_sym(n, extra_per_row=3.0, seed=0, diag_scale=1.0,
                      zero_diag_fraction=0.0):
    """Random symmetric sparse matrix with explicit (possibly zero) diagonal."""
    rs = np.random.RandomState(seed)
    seen = set()
    rows, cols, vals = [], [], []
    diag = rs.randn(n) * diag_scale
    if zero_diag_fraction > 0.0:
        mask = rs.rand(n) < zero_diag_fraction
        diag[mask] = 0.0
    for i in range(n):
        rows.append(i)
        cols.append(i)
        vals.append(float(diag[i]))
    target = int(extra_per_row * n)
    for _ in range(4 * target):
        if len(seen) >= target:
            break
        i, j = rs.randint(0, n, 2)
        if i == j:
            continue
        key = (max(i, j), min(i, j))
        if key in seen:
            continue
        seen.add(key)
        rows.append(key[0])
        cols.append(key[1])
        vals.append(float(rs.randn()))
    return SparseSymMatrix.from_coo(n, rows, cols, vals)


def connected_random_sym(n, seed=0, extra_per_row=2.0):
    """Like random_sparse_sym but with a guaranteed path through all rows,
    so the matrix is structurally nonsingular for matching tests."""
    rs = np.random.RandomState(seed)
    rows = list(range(n))
    cols = list(range(n))
    vals = [float(v) for v in rs.randn(n)]
    seen = set()
    for i in range(n - 1):
        seen.add((i + 1, i))
        rows.append(i + 1)
        cols.append(i)
        vals.append(float(rs.randn() + np.sign(rs.randn()) * 0.5))
    target = int(extra_per_row * n)
    for _ in range(4 * target):
        if len(seen) >= target + n - 1:
            break
        i, j = rs.randint(0, n, 2)
        if i == j:
            continue
        key = (max(i, j), min(i, j))
        if key in seen:
            continue
        seen.add(key)
        rows.append(key[0])
        cols.append(key[1])
        vals.append(float(rs.randn()))
    return SparseSymMatrix.from_coo(n, rows, cols, vals)


@pytest.fixture(scope="session")
def figure_pattern():
    """The 6x6 large/small illustration pattern used for the cycle-splitting
    walkthrough: large entries (1.0) on the matched positions, small (0.1)
    elsewhere, zero diagonals on the 3-cycle members.

    1-based unordered large pairs: {1,2}, {1,4}, {2,4}, {3,5} and the
    diagonal (6,6); smalls at (3,2), (6,4), (6,5) and diagonal (3,3).
    """
    entries = {
        (1, 0): 1.0, (3, 0): 1.0, (3, 1): 1.0, (4, 2): 1.0, (5, 5): 1.0,
        (2, 1): 0.1, (5, 3): 0.1, (5, 4): 0.1, (2, 2): 0.1,
    }
    rows = [r for r, _ in entries]
    cols = [c for _, c in entries]
    vals = list(entries.values())
    return SparseSymMatrix.from_coo(6, rows, cols, vals)
