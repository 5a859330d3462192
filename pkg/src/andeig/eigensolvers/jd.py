"""Symmetric Jacobi-Davidson with deflation and thick restarts.

The search space grows by approximate solutions of the projected correction
equation (I-QQ^T)(A - theta I)(I-QQ^T) z = -r, solved by sqmr with the
projected multilevel preconditioner.  Early correction solves may be crude;
only once an eigenpair is nearly converged does the inner tolerance tighten.
Converged Ritz vectors are deflated into Q so later pairs come out mutually
orthogonal.
"""

from __future__ import annotations

import numpy as np

from .. import rng
from ..dense import dense_eig
from ..krylov import make_jd_operator, make_jd_preconditioner, sqmr_solve
from ..mlildl import FactorParams, MultilevelFactor, factorize
from ..sparse import SparseSymMatrix, sym_matvec
from .types import EigenPair, SolverConfig, SolverStagnationError, sort_pairs_by_target


def make_factor_factory(a: SparseSymMatrix, params: FactorParams | None = None,
                        sigma: float = 0.0):
    """Per-shift preconditioner contract that factors A - sigma I once and
    reuses it for every requested theta (refactoring per outer step would
    dominate the runtime for interior targets)."""
    shifted = _shifted(a, sigma)
    factor = factorize(shifted, params)

    def factory(theta: float) -> MultilevelFactor:
        return factor

    return factory


def _shifted(a: SparseSymMatrix, sigma: float) -> SparseSymMatrix:
    if sigma == 0.0:
        return a
    vals = a.values.copy()
    vals[a.row_starts[1:] - 1] -= sigma
    return SparseSymMatrix(a.n, a.row_starts, a.col_indices, vals, _validate=False)


def _orthonormalize(z: np.ndarray, basis_list) -> np.ndarray | None:
    """Twice-orthogonalized unit vector, or None if z collapses."""
    z = z.copy()
    orig = float(np.linalg.norm(z))
    if orig == 0.0 or not np.isfinite(orig):
        return None
    for _ in range(2):
        for basis in basis_list:
            if basis is not None and basis.shape[1]:
                z -= basis @ (basis.T @ z)
    nrm = float(np.linalg.norm(z))
    if nrm < 1e-10 * orig or nrm == 0.0:
        return None
    return z / nrm


def jd_solve(a: SparseSymMatrix, precond_factory, cfg: SolverConfig | None = None,
             trace=None) -> list[EigenPair]:
    """Eigenpairs nearest the target by symmetric Jacobi-Davidson.

    ``precond_factory(theta)`` supplies the multilevel factor used inside the
    projected preconditioner (see make_factor_factory).  Returns n_wanted
    pairs with residuals below outer_tol * ||A||_1 and pairwise orthogonal
    eigenvectors; raises SolverStagnationError when the outer budget runs out.
    """
    if cfg is None:
        cfg = SolverConfig()
    n = a.n
    sched = cfg.inner_tol_schedule
    a_norm1 = a.norm1()
    conv_tol = cfg.outer_tol * a_norm1
    v0 = rng.starting_vector(cfg.seed, n)
    V = v0.reshape(-1, 1)
    AV = sym_matvec(a, v0).reshape(-1, 1)
    H = np.array([[float(v0 @ AV[:, 0])]])
    Q = np.zeros((n, 0))
    pairs: list[EigenPair] = []
    pair_step = 0
    for outer in range(1, cfg.max_outer + 1):
        pair_step += 1
        theta_all, S = dense_eig(H)
        pick = min(range(len(theta_all)),
                   key=lambda i: (abs(theta_all[i] - cfg.target_sigma), theta_all[i]))
        theta = float(theta_all[pick])
        s = S[:, pick]
        u = V @ s
        u /= float(np.linalg.norm(u))
        au = sym_matvec(a, u)
        r = au - theta * u
        if Q.shape[1]:
            r -= Q @ (Q.T @ r)  # keep the residual in the deflated subspace
        rnorm = float(np.linalg.norm(r))
        # fixed-shift phase: far from convergence the Ritz value is noisy, so
        # the correction uses the target shift (which the preconditioner
        # matches exactly); switch to the Ritz value once the pair settles
        shift = theta if rnorm < 1e-2 * a_norm1 else cfg.target_sigma
        if trace is not None:
            trace({"solver": "jd", "outer": outer, "theta": theta,
                   "residual": rnorm, "inner": None})
        if rnorm <= conv_tol:
            pairs.append(EigenPair(value=theta, vector=u.copy(),
                                   residual=rnorm, converged=True))
            Q = np.column_stack([Q, u])
            pair_step = 0
            if len(pairs) == cfg.n_wanted:
                return sort_pairs_by_target(pairs, cfg.target_sigma)
            # purge the converged direction, keep the other Ritz vectors
            rest = [i for i in range(len(theta_all)) if i != pick]
            if rest:
                S_rest = S[:, rest]
                V = V @ S_rest
                AV = AV @ S_rest
                H = np.diag(theta_all[rest]).copy()
            else:
                fresh = _orthonormalize(
                    rng.starting_vector(cfg.seed + 13 * len(pairs), n), [Q])
                if fresh is None:
                    break
                V = fresh.reshape(-1, 1)
                AV = sym_matvec(a, fresh).reshape(-1, 1)
                H = np.array([[float(fresh @ AV[:, 0])]])
            continue
        # correction equation
        k_factor = precond_factory(shift)
        qu = np.column_stack([Q, u])
        op = make_jd_operator(a, shift, qu)
        z = None
        try:
            precond = make_jd_preconditioner(k_factor, u, extra_basis=Q)
            itol = sched.tolerance(pair_step, rnorm)
            z, rep = sqmr_solve(op, precond, -r, tol=itol, maxit=sched.max_inner)
            if trace is not None:
                trace({"solver": "jd", "outer": outer, "theta": theta,
                       "residual": rnorm, "inner": rep.iterations})
            if not np.all(np.isfinite(z)) or float(np.linalg.norm(z)) == 0.0:
                z = None
        except ValueError:
            z = None
        if z is None:
            z = -r  # steepest-descent fallback direction
        vnew = _orthonormalize(z, [Q, V])
        if vnew is None:
            vnew = _orthonormalize(rng.starting_vector(cfg.seed + 977 + outer, n),
                                   [Q, V])
            if vnew is None:
                break
        if V.shape[1] >= cfg.max_basis:
            # thick restart: keep the Ritz vectors nearest the target
            keep_idx = sorted(range(len(theta_all)),
                              key=lambda i: (abs(theta_all[i] - cfg.target_sigma),
                                             theta_all[i]))[:cfg.restart_size]
            S_keep = S[:, keep_idx]
            V = V @ S_keep
            AV = AV @ S_keep
            H = np.diag(theta_all[keep_idx]).copy()
            vnew = _orthonormalize(vnew, [Q, V])
            if vnew is None:
                continue
        av_new = sym_matvec(a, vnew)
        cross = V.T @ av_new
        hnew = np.empty((H.shape[0] + 1, H.shape[1] + 1))
        hnew[:-1, :-1] = H
        hnew[:-1, -1] = cross
        hnew[-1, :-1] = cross
        hnew[-1, -1] = float(vnew @ av_new)
        H = hnew
        V = np.column_stack([V, vnew])
        AV = np.column_stack([AV, av_new])
    raise SolverStagnationError(
        f"jd: {len(pairs)} of {cfg.n_wanted} pairs converged "
        f"within {cfg.max_outer} outer steps", pairs)
