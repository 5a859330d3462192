"""Independent brute-force oracles used to pin expected values.

These deliberately share no code with the library paths they check.
"""

import itertools
import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=8)
def _perm_table(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64)


def exhaustive_lap(dense_cost: np.ndarray):
    """Minimum assignment cost by enumerating every permutation (n <= 10).

    dense_cost uses +inf for absent entries.  Returns (best_cost, best_perm)
    with best_perm[col] = row, or (inf, None) if no perfect matching exists.
    """
    n = dense_cost.shape[0]
    perms = _perm_table(n)
    gathered = dense_cost[perms, np.arange(n)[None, :]]
    totals = gathered.sum(axis=1)
    feasible = np.all(np.isfinite(gathered), axis=1)
    if not np.any(feasible):
        return math.inf, None
    totals = np.where(feasible, totals, np.inf)
    best_idx = int(np.argmin(totals))
    return float(totals[best_idx]), tuple(perms[best_idx])


def exhaustive_max_product(dense_abs: np.ndarray):
    """Maximum product of matched magnitudes over all perfect matchings."""
    n = dense_abs.shape[0]
    perms = _perm_table(n)
    gathered = dense_abs[perms, np.arange(n)[None, :]]
    feasible = np.all(gathered > 0.0, axis=1)
    if not np.any(feasible):
        return 0.0
    prods = np.where(feasible, np.prod(gathered, axis=1), -np.inf)
    return float(np.max(prods))


def dense_lower_inverse_infnorm(lower_unit: np.ndarray) -> float:
    """inf-norm of the inverse of a unit lower triangular matrix; the inverse
    comes from a general-purpose dense solver, independent of the library's
    greedy estimator."""
    inv = np.linalg.inv(lower_unit)
    return float(np.max(np.sum(np.abs(inv), axis=1)))
