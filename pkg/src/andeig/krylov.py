"""Simplified QMR for symmetric indefinite systems, plus the projected
operators of the Jacobi-Davidson correction equation.

The solver is the coupled two-term symmetric QMR: one operator application
per iteration, a symmetric (possibly indefinite) preconditioner applied once
per iteration, and quasi-residual smoothing of the iterates.  Convergence is
certified against the true residual, which is also re-checked every 50
iterations to guard against recurrence drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import rng
from .mlildl import MultilevelFactor, apply_preconditioner
from .sparse import DenseVector, SparseSymMatrix, sym_matvec


@dataclass(frozen=True)
class LinearOperator:
    """Matrix-free symmetric operator: dimension plus an apply contract."""

    dimension: int
    apply: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.apply(x)

    @classmethod
    def from_matrix(cls, a: SparseSymMatrix, shift: float = 0.0) -> "LinearOperator":
        """Operator for A - shift*I."""
        if shift == 0.0:
            return cls(a.n, lambda x: sym_matvec(a, x))
        return cls(a.n, lambda x: sym_matvec(a, x) - shift * x)

    @classmethod
    def identity(cls, n: int) -> "LinearOperator":
        return cls(n, lambda x: x.copy())

    @classmethod
    def from_factor(cls, f: MultilevelFactor) -> "LinearOperator":
        return cls(f.n, lambda x: apply_preconditioner(f, x))


@dataclass(frozen=True)
class SqmrReport:
    iterations: int
    final_relative_residual: float
    converged: bool
    breakdown: str | None = None


_BREAKDOWN_TOL = 1e-14


def _perturbed_restart(op, apply_m, b, x, r, q, t, it):
    """Fresh QMR state from a slightly rotated iterate after a breakdown.

    The step size scales with a local operator-norm estimate ||t||/||q|| so
    the residual direction changes by about 10 percent, enough to leave the
    breakdown subspace without losing the progress made so far.
    """
    n = len(b)
    s_op = float(np.linalg.norm(t)) / max(float(np.linalg.norm(q)), 1e-300)
    delta = 0.1 * float(np.linalg.norm(r)) / max(s_op, 1e-300)
    direction = rng.uniform01(0xB4EA4, n, start=it * n) - 0.5
    direction /= max(float(np.linalg.norm(direction)), 1e-300)
    x = x + delta * direction
    r = b - op(x)
    q = apply_m(r)
    rho = float(r @ q)
    tau = float(np.linalg.norm(r))
    return x, r, q, rho, tau, 0.0, np.zeros(n)


def sqmr_solve(op: LinearOperator, precond: LinearOperator | None, b: DenseVector,
               tol: float = 1e-10, maxit: int = 1000,
               x0: np.ndarray | None = None) -> tuple[np.ndarray, SqmrReport]:
    """Solves op(x) = b for symmetric op with a symmetric preconditioner.

    Returns (x, report); report.converged means the recomputed true residual
    satisfies ||op(x) - b|| <= tol * ||b||.  A vanishing inner product (the
    Lanczos breakdown of symmetric indefinite problems) triggers a restart
    from the current iterate with a deterministically perturbed direction; if
    the breakdowns persist the report carries the reason and the caller may
    restart with different data.
    """
    n = op.dimension
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (n,):
        raise ValueError("right-hand side dimension mismatch")
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return np.zeros(n), SqmrReport(0, 0.0, True)
    apply_m = precond.apply if precond is not None else (lambda r: r.copy())
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    r = b - op(x) if x0 is not None else b.copy()
    q = apply_m(r)
    rho = float(r @ q)
    tau = float(np.linalg.norm(r))
    theta = 0.0
    d = np.zeros(n)
    best_x = x.copy()
    best_res = tau / norm_b
    breakdown = None
    restarts_left = 2
    it = 0
    while it < maxit:
        it += 1
        t = op(q)
        sigma = float(q @ t)
        if abs(sigma) <= _BREAKDOWN_TOL * float(np.linalg.norm(q)) * float(np.linalg.norm(t)):
            breakdown = "vanishing q^T A q"
            if restarts_left > 0:
                restarts_left -= 1
                x, r, q, rho, tau, theta, d = _perturbed_restart(
                    op, apply_m, b, x, r, q, t, it)
                continue
            break
        alpha = rho / sigma
        r = r - alpha * t
        res_norm = float(np.linalg.norm(r))
        if res_norm == 0.0 or tau <= 1e-290 or not math.isfinite(tau):
            # the recurrence residual (or the quasi-residual scale) vanished:
            # finish the smoothing step if it is still well defined, then
            # settle against the true residual
            if math.isfinite(theta) and math.isfinite(alpha):
                d = (theta * theta) * d + alpha * q
                x = x + d
            true_res = float(np.linalg.norm(b - op(x))) / norm_b
            if true_res < best_res:
                best_res = true_res
                best_x = x.copy()
            if true_res <= tol:
                return x, SqmrReport(it, true_res, True)
            breakdown = "vanishing quasi-residual with unconverged iterate"
            if restarts_left > 0:
                restarts_left -= 1
                x, r, q, rho, tau, theta, d = _perturbed_restart(
                    op, apply_m, b, best_x, r, q, t, it)
                continue
            break
        theta_new = res_norm / tau
        c = 1.0 / math.sqrt(1.0 + theta_new * theta_new)
        tau = tau * theta_new * c
        d = (c * c * theta * theta) * d + (c * c * alpha) * q
        x = x + d
        theta = theta_new
        # quasi-residual bound; confirm with the true residual before claiming
        bound = tau * math.sqrt(it + 1.0)
        if bound <= tol * norm_b or it % 50 == 0 or it == maxit:
            true_res = float(np.linalg.norm(b - op(x))) / norm_b
            if true_res < best_res:
                best_res = true_res
                best_x = x.copy()
            if true_res <= tol:
                return x, SqmrReport(it, true_res, True)
        u = apply_m(r)
        rho_new = float(r @ u)
        if abs(rho_new) <= _BREAKDOWN_TOL * float(np.linalg.norm(r)) * float(np.linalg.norm(u)):
            true_res = float(np.linalg.norm(b - op(x))) / norm_b
            if true_res <= tol:
                return x, SqmrReport(it, true_res, True)
            breakdown = "vanishing r^T M^{-1} r"
            if restarts_left > 0:
                restarts_left -= 1
                x, r, q, rho, tau, theta, d = _perturbed_restart(
                    op, apply_m, b, x, r, q, u, it)
                continue
            break
        beta = rho_new / rho
        rho = rho_new
        q = u + beta * q
    true_res = float(np.linalg.norm(b - op(x))) / norm_b
    if true_res < best_res:
        best_res = true_res
        best_x = x
    return best_x, SqmrReport(it, best_res, best_res <= tol, breakdown)


def make_jd_operator(a: SparseSymMatrix, theta: float,
                     q_basis: np.ndarray | None) -> LinearOperator:
    """Projected shifted operator z -> (I - QQ^T)(A - theta I)(I - QQ^T) z.

    q_basis holds orthonormal columns (deflated eigenvectors plus the current
    Ritz vector); orthonormality is checked to 1e-8.
    """
    if q_basis is None or q_basis.size == 0:
        return LinearOperator.from_matrix(a, theta)
    q = np.asarray(q_basis, dtype=np.float64)
    if q.ndim == 1:
        q = q.reshape(-1, 1)
    gram = q.T @ q
    if np.max(np.abs(gram - np.eye(q.shape[1]))) > 1e-8:
        raise ValueError("projection basis is not orthonormal")

    def apply(z):
        z = z - q @ (q.T @ z)
        z = sym_matvec(a, z) - theta * z
        return z - q @ (q.T @ z)

    return LinearOperator(a.n, apply)


def make_jd_preconditioner(k: MultilevelFactor, u: np.ndarray,
                           extra_basis: np.ndarray | None = None) -> LinearOperator:
    """Preconditioner for the correction equation: K^{-1} followed by the
    oblique projection that returns output orthogonal to u (and any deflated
    basis): r -> (I - W (U^T W)^{-1} U^T) K^{-1} r with W = K^{-1} U.

    With a single vector this is (I - w u^T / (u^T w)) K^{-1}.  Raises when
    u^T K^{-1} u is numerically zero, which makes the projection unusable.
    """
    u = np.asarray(u, dtype=np.float64)
    if extra_basis is not None and extra_basis.size:
        basis = np.column_stack([extra_basis, u])
    else:
        basis = u.reshape(-1, 1)
    w = np.column_stack([apply_preconditioner(k, basis[:, j])
                         for j in range(basis.shape[1])])
    gram = basis.T @ w
    if basis.shape[1] == 1:
        denom = float(gram[0, 0])
        scale = float(np.linalg.norm(w)) * float(np.linalg.norm(u))
        if abs(denom) < 1e-14 * max(scale, 1e-300):
            raise ValueError("u^T K^{-1} u vanishes; preconditioner unusable for this u")
    else:
        if abs(np.linalg.det(gram)) < 1e-300:
            raise ValueError("deflated projection system is singular")

    def apply(r):
        y = apply_preconditioner(k, r)
        coeff = np.linalg.solve(gram, basis.T @ y)
        return y - w @ coeff

    return LinearOperator(k.n, apply)
