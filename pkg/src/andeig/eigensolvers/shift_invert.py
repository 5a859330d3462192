"""Shift-and-invert Lanczos with implicit restarts.

Works on the operator (A - sigma I)^{-1}: eigenvalues near the shift become
extremal and converge in few steps, at the price of solving an inner linear
system to full accuracy at every step.  When the basis is full, implicitly
shifted QR steps with the unwanted Ritz values as shifts compress the
factorization to restart_size columns without any extra operator
applications.
"""

from __future__ import annotations

import math

import numpy as np

from .. import rng
from ..krylov import LinearOperator, sqmr_solve
from ..mlildl import FactorParams, MultilevelFactor, factorize
from ..sparse import SparseSymMatrix, sym_matvec
from .lanczos import tridiag_eig
from .types import EigenPair, SolverConfig, SolverStagnationError, TridiagMatrix, \
    sort_pairs_by_target

_EPS = float(np.finfo(np.float64).eps)


class InnerSolveError(RuntimeError):
    """The inner shifted solve failed to reach its tolerance."""


class ShiftInvertSolver:
    """Inner solve contract: x = (A - sigma I)^{-1} rhs via sqmr with a
    multilevel preconditioner, to full accuracy.  Counts calls/iterations.

    "Full accuracy" means tol (default 1e-12 relative) when attainable; for
    shifts very close to an eigenvalue the residual of any solve bottoms out
    near eps * cond(A - sigma I), so after the restarts are exhausted a
    residual within ``floor_slack`` of tol is still accepted.
    """

    def __init__(self, a: SparseSymMatrix, sigma: float,
                 params: FactorParams | None = None,
                 factor: MultilevelFactor | None = None,
                 tol: float = 1e-12, maxit: int = 1000, floor_slack: float = 10.0):
        self.op = LinearOperator.from_matrix(a, sigma)
        if factor is None:
            factor = factorize(_shifted_matrix(a, sigma), params)
        self.factor = factor
        self.precond = LinearOperator.from_factor(factor)
        self.tol = tol
        self.maxit = maxit
        self.floor_slack = floor_slack
        self.calls = 0
        self.total_iterations = 0

    def __call__(self, rhs: np.ndarray) -> np.ndarray:
        x = None
        rep = None
        best = math.inf
        for _attempt in range(3):
            x, rep = sqmr_solve(self.op, self.precond, rhs,
                                tol=self.tol, maxit=self.maxit, x0=x)
            self.total_iterations += rep.iterations
            if rep.converged:
                self.calls += 1
                return x
            if rep.final_relative_residual >= best * 0.5 and rep.breakdown is None:
                break  # plain stagnation; restarting will not help
            best = min(best, rep.final_relative_residual)
        if rep.final_relative_residual <= self.tol * self.floor_slack:
            self.calls += 1
            return x
        raise InnerSolveError(
            f"inner solve stalled at relative residual {rep.final_relative_residual:.3e}"
            + (f" ({rep.breakdown})" if rep.breakdown else ""))


def _shifted_matrix(a: SparseSymMatrix, sigma: float) -> SparseSymMatrix:
    if sigma == 0.0:
        return a
    vals = a.values.copy()
    diag_pos = a.row_starts[1:] - 1
    vals[diag_pos] -= sigma
    return SparseSymMatrix(a.n, a.row_starts, a.col_indices, vals, _validate=False)


def implicit_qr_step(alpha: np.ndarray, beta: np.ndarray, mu: float,
                     q: np.ndarray) -> None:
    """One implicitly shifted symmetric QR step on a tridiagonal, in place.

    alpha (k,), beta (k-1,) are the diagonal/subdiagonal; q (k, k) accumulates
    the orthogonal similarity (columns are combined by each rotation).
    """
    k = len(alpha)
    if k < 2:
        return
    x = alpha[0] - mu
    z = beta[0]
    for i in range(k - 1):
        r = math.hypot(x, z)
        if r == 0.0:
            c, s = 1.0, 0.0
        else:
            c, s = x / r, z / r
        if i > 0:
            beta[i - 1] = r
        a1, a2, b = alpha[i], alpha[i + 1], beta[i]
        alpha[i] = c * c * a1 + 2.0 * c * s * b + s * s * a2
        alpha[i + 1] = s * s * a1 - 2.0 * c * s * b + c * c * a2
        beta[i] = c * s * (a2 - a1) + (c * c - s * s) * b
        if i < k - 2:
            z = s * beta[i + 1]
            beta[i + 1] = c * beta[i + 1]
        gcol = q[:, i].copy()
        q[:, i] = c * gcol + s * q[:, i + 1]
        q[:, i + 1] = -s * gcol + c * q[:, i + 1]
        x = beta[i]


def implicit_restart(alpha, beta, beta_res, v, keep: int, shifts):
    """Compresses a Lanczos factorization OP V = V T + beta_res v_res e_k^T
    to ``keep`` columns by implicitly shifted QR with the given shifts.

    v holds k+1 columns (basis plus residual direction).  Returns the new
    (alpha, beta, beta_res) with arrays truncated to ``keep`` and v updated
    in place (columns 0..keep hold the compressed basis and residual).
    """
    k = len(alpha)
    q = np.eye(k)
    for mu in shifts:
        implicit_qr_step(alpha, beta, float(mu), q)
    vnew = v[:, :k] @ q[:, :keep + 1] if keep + 1 <= k else v[:, :k] @ q
    f_new = vnew[:, keep] * beta[keep - 1] + v[:, k] * (beta_res * q[k - 1, keep - 1])
    beta_new_res = float(np.linalg.norm(f_new))
    v[:, :keep] = vnew[:, :keep]
    if beta_new_res > 0.0:
        v[:, keep] = f_new / beta_new_res
    else:
        v[:, keep] = 0.0
    al = alpha[:keep].copy()
    be = beta[:keep - 1].copy()
    # absorb negative subdiagonals into basis-column signs (beta >= 0
    # convention): with column signs d_0=1, d_{j+1} = sgn(d_j * be[j]) the
    # transformed subdiagonal becomes |be[j]| and T stays similar
    d = 1.0
    for j in range(keep - 1):
        eff = d * be[j]
        d = 1.0 if eff >= 0.0 else -1.0
        be[j] = abs(eff)
        if d < 0.0:
            v[:, j + 1] = -v[:, j + 1]
    if d < 0.0:
        v[:, keep] = -v[:, keep]  # residual couples to the flipped last column
    return al, be, beta_new_res


def si_lanczos_ir(a: SparseSymMatrix, solver, cfg: SolverConfig | None = None,
                  trace=None) -> list[EigenPair]:
    """Interior eigenpairs by implicitly restarted shift-invert Lanczos.

    ``solver`` is the inner solve contract rhs -> (A - sigma I)^{-1} rhs at
    full accuracy (see ShiftInvertSolver).  Ritz values mu map back through
    lambda = sigma + 1/mu; the basis is fully reorthogonalized.
    """
    if cfg is None:
        cfg = SolverConfig()
    n = a.n
    k_max = min(cfg.max_basis, n)
    keep = min(cfg.restart_size, max(cfg.n_wanted, k_max - 1))
    sigma = cfg.target_sigma
    a_norm1 = a.norm1()
    conv_tol = cfg.outer_tol * a_norm1
    v = np.zeros((n, k_max + 1))
    v[:, 0] = rng.starting_vector(cfg.seed, n)
    alpha = np.zeros(k_max)
    beta = np.zeros(k_max)  # beta[j] couples columns j and j+1; last is residual
    j0 = 0
    best_pairs: list[EigenPair] = []
    for cycle in range(cfg.max_outer):
        k_cur = k_max
        for j in range(j0, k_max):
            w = solver(v[:, j])
            alpha[j] = float(v[:, j] @ w)
            vb = v[:, :j + 1]
            w = w - vb @ (vb.T @ w)
            w = w - vb @ (vb.T @ w)
            bnorm = float(np.linalg.norm(w))
            if bnorm <= 1e3 * _EPS * max(1.0, float(np.abs(alpha[:j + 1]).max())):
                # exact invariant subspace: restart the tail from a fresh
                # random direction orthogonal to the current basis
                fresh = rng.starting_vector(cfg.seed + 101 + cycle + j, n)
                fresh -= vb @ (vb.T @ fresh)
                fresh -= vb @ (vb.T @ fresh)
                fn = float(np.linalg.norm(fresh))
                if fn <= 1e-12:
                    k_cur = j + 1
                    break
                w = fresh
                bnorm = 0.0  # decoupled continuation: T stays block diagonal
                beta[j] = bnorm
                v[:, j + 1] = w / fn
                continue
            beta[j] = bnorm
            v[:, j + 1] = w / bnorm
        t = TridiagMatrix(alpha[:k_cur], beta[:k_cur - 1])
        mu, s = tridiag_eig(t, want_vectors=True)
        nonzero = np.abs(mu) > 1e-300
        order = np.argsort(-np.abs(np.where(nonzero, mu, 0.0)), kind="stable")
        wanted = order[:cfg.n_wanted]
        pairs = []
        all_ok = True
        for idx in wanted:
            lam = sigma + 1.0 / mu[idx] if abs(mu[idx]) > 1e-300 else math.inf
            y = v[:, :k_cur] @ s[:, idx]
            ynorm = float(np.linalg.norm(y))
            if ynorm == 0.0 or not math.isfinite(lam):
                all_ok = False
                continue
            y /= ynorm
            resid = float(np.linalg.norm(sym_matvec(a, y) - lam * y))
            pairs.append(EigenPair(value=float(lam), vector=y, residual=resid,
                                   converged=bool(resid <= conv_tol)))
            if resid > conv_tol:
                all_ok = False
        if trace is not None:
            trace({"solver": "silanczos", "outer": cycle + 1,
                   "residuals": [p.residual for p in pairs],
                   "inner_calls": getattr(solver, "calls", None)})
        if pairs:
            best_pairs = pairs
        if all_ok and len(pairs) == cfg.n_wanted:
            return sort_pairs_by_target(pairs, sigma)
        if k_cur < 2:
            v[:, 0] = rng.starting_vector(cfg.seed + 977 + cycle, n)
            j0 = 0
            continue
        # implicit restart with the unwanted (small |mu|) Ritz values as shifts
        shifts = mu[order[keep:]] if k_cur > keep else []
        al, be, bres = implicit_restart(alpha[:k_cur].copy(), beta[:k_cur - 1].copy(),
                                        beta[k_cur - 1], v, min(keep, k_cur - 1),
                                        shifts)
        j0 = len(al)
        alpha[:j0] = al
        beta[:j0 - 1] = be
        beta[j0 - 1] = bres
        if bres <= 1e3 * _EPS:
            # restart collapsed; reseed the continuation vector
            fresh = rng.starting_vector(cfg.seed + 3001 + cycle, n)
            fresh -= v[:, :j0] @ (v[:, :j0].T @ fresh)
            v[:, j0] = fresh / max(float(np.linalg.norm(fresh)), 1e-300)
    raise SolverStagnationError(
        f"no convergence after {cfg.max_outer} restart cycles", best_pairs)
