"""Shared types for the eigensolver strategies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class EigenPair:
    """An approximate eigenpair (value, unit vector) with its residual
    ||A x - lambda x||_2; ``converged`` is False when the solver could not
    push the residual below its tolerance for this pair."""

    value: float
    vector: np.ndarray
    residual: float
    multiplicity_hint: int = 1
    converged: bool = True


@dataclass(frozen=True)
class TridiagMatrix:
    """Symmetric tridiagonal matrix: diagonal alpha, subdiagonal beta >= 0."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64)
        beta = np.asarray(self.beta, dtype=np.float64)
        if len(beta) != max(len(alpha) - 1, 0):
            raise ValueError("beta must have length len(alpha) - 1")
        if len(beta) and beta.min() < 0.0:
            raise ValueError("beta entries must be >= 0 (sign lives in the vectors)")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def order(self) -> int:
        return len(self.alpha)

    def norm_bound(self) -> float:
        """Cheap upper bound on ||T||_2 (Gershgorin)."""
        b = float(np.max(self.beta)) if len(self.beta) else 0.0
        a = float(np.max(np.abs(self.alpha))) if len(self.alpha) else 0.0
        return a + 2.0 * b

    def deleted_first(self) -> "TridiagMatrix":
        """T with its first row and column removed."""
        return TridiagMatrix(self.alpha[1:], self.beta[1:])


@dataclass(frozen=True)
class InnerToleranceSchedule:
    """Tolerance rule for the Jacobi-Davidson correction solves: while the
    eigenpair residual is above ``switch_residual`` the inner tolerance is
    max(2^-step, floor); afterwards it is ``final``.  The correction solves
    are relative solves, so ``final`` well above machine precision still
    drives the Newton-like outer iteration to tight residuals; a very small
    ``final`` only buys inner iterations, not outer accuracy."""

    floor: float = 1e-4
    final: float = 1e-6
    switch_residual: float = 1e-5
    max_inner: int = 50

    def tolerance(self, step: int, pair_residual: float) -> float:
        if pair_residual < self.switch_residual:
            return self.final
        return max(2.0 ** (-step), self.floor)


@dataclass(frozen=True)
class SolverConfig:
    n_wanted: int = 5
    target_sigma: float = 0.0
    max_basis: int = 20
    restart_size: int = 8
    outer_tol: float = 1e-8
    inner_tol_schedule: InnerToleranceSchedule = field(default_factory=InnerToleranceSchedule)
    seed: int = 1
    cwi_factor: float = 4.0
    cwi_spurious_tol: float = 1e-8  # relative to ||T||
    cwi_max_steps: int = 200000
    max_outer: int = 400

    def __post_init__(self):
        if not (0 < self.n_wanted <= self.restart_size < self.max_basis):
            raise ValueError("need n_wanted <= restart_size < max_basis")
        if self.outer_tol <= 0:
            raise ValueError("outer_tol must be positive")
        if self.cwi_factor <= 0:
            raise ValueError("cwi_factor must be positive")


class SolverStagnationError(RuntimeError):
    """Raised when a solver exhausts its outer iterations; ``pairs`` carries
    the best pairs found so far."""

    def __init__(self, message, pairs):
        super().__init__(message)
        self.pairs = pairs


def sort_pairs_by_target(pairs, target: float):
    """Nearest-to-target first; equidistant values put the smaller first."""
    return sorted(pairs, key=lambda p: (abs(p.value - target), p.value))


def select_nearest(values, target: float, count: int):
    """Indices of the ``count`` values nearest to target (stable tie rule)."""
    order = sorted(range(len(values)), key=lambda i: (abs(values[i] - target), values[i]))
    return order[:count]
