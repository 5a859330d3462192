"""Lanczos without reorthogonalization, with spurious-value filtering.

Long unreorthogonalized runs replicate converged Ritz values while also
producing spurious copies of already-found values.  The filter compares the
spectrum of T against the spectrum of T with its first row and column
deleted: eigenvalues that are simple in T but shared with the deleted matrix
are artifacts of lost orthogonality and are discarded; values replicated in
T count as converged.  Eigenvectors are rebuilt by a second run from the
same start vector, so no basis is ever stored.
"""

from __future__ import annotations

import numpy as np

from .. import rng
from ..dense import tridiag_eigenvalues
from ..krylov import LinearOperator
from ..sparse import SparseSymMatrix, sym_matvec
from .lanczos import lanczos_run, tridiag_eigvec_for_value
from .types import (
    EigenPair,
    SolverConfig,
    TridiagMatrix,
    select_nearest,
    sort_pairs_by_target,
)


def cwi_identify(t: TridiagMatrix, tol: float):
    """Splits the Ritz values of an unreorthogonalized run into good and
    spurious.

    Returns (good, spurious): good is a list of (value, multiplicity) over
    clusters of width tol, using the cluster mean as the value; spurious
    lists the discarded values.  A value is spurious iff it is simple in T
    and also an eigenvalue of T-with-first-row/column-deleted within tol.
    """
    w = tridiag_eigenvalues(t.alpha, t.beta)
    if t.order <= 1:
        return [(float(v), 1) for v in w], []
    w_hat = tridiag_eigenvalues(t.deleted_first().alpha, t.deleted_first().beta)
    good = []
    spurious = []
    i = 0
    n = len(w)
    while i < n:
        j = i + 1
        while j < n and w[j] - w[j - 1] <= tol:
            j += 1
        cluster = w[i:j]
        value = float(np.mean(cluster))
        mult = j - i
        if mult == 1:
            k = int(np.searchsorted(w_hat, value))
            near_hat = any(
                0 <= idx < len(w_hat) and abs(w_hat[idx] - value) <= tol
                for idx in (k - 1, k))
            if near_hat:
                spurious.append(value)
                i = j
                continue
        good.append((value, mult))
        i = j
    return good, spurious


def cwi_solve(a: SparseSymMatrix, cfg: SolverConfig | None = None,
              trace=None) -> list[EigenPair]:
    """Interior eigenpairs via long unreorthogonalized Lanczos runs.

    Runs cwi_factor * n steps (capped), filters spurious values, selects the
    wanted values nearest the target, and rebuilds each eigenvector with a
    second pass from the identical start vector.  Pairs that fail the
    residual tolerance are returned with converged=False rather than dropped.
    """
    if cfg is None:
        cfg = SolverConfig()
    n = a.n
    steps = int(round(cfg.cwi_factor * n))
    steps = max(min(steps, cfg.cwi_max_steps), min(n, 2 * cfg.n_wanted + 20))
    v1 = rng.starting_vector(cfg.seed, n)
    op = LinearOperator.from_matrix(a)
    run = lanczos_run(op, v1, steps, reorth=False)
    t = run.t
    tol_spur = cfg.cwi_spurious_tol * max(t.norm_bound(), 1e-300)
    good, _spurious = cwi_identify(t, tol_spur)
    if trace is not None:
        trace({"solver": "cwi", "steps": run.steps_done,
               "good": len(good), "spurious": len(_spurious)})
    values = [g[0] for g in good]
    mults = [g[1] for g in good]
    picked = select_nearest(values, cfg.target_sigma, cfg.n_wanted)
    sel_values = [values[i] for i in picked]
    sel_mults = [mults[i] for i in picked]
    a_norm1 = a.norm1()
    conv_tol = cfg.outer_tol * a_norm1
    candidates = []  # (pair_index, T-space vector)
    for col, (lam, mult) in enumerate(zip(sel_values, sel_mults)):
        for s in _t_vector_candidates(t, lam, mult):
            candidates.append((col, s))
    svecs = np.column_stack([s for _, s in candidates]) \
        if candidates else np.zeros((t.order, 0))
    lifted = _lift_ritz_vectors(op, v1, run.steps_done, svecs)
    pairs = []
    for col, (lam, mult) in enumerate(zip(sel_values, sel_mults)):
        best_res, best_x = np.inf, None
        for j, (owner, _) in enumerate(candidates):
            if owner != col:
                continue
            resid, x = _finalize_vector(a, lam, lifted[:, j])
            if resid < best_res:
                best_res, best_x = resid, x
        pairs.append(EigenPair(value=float(lam), vector=best_x, residual=best_res,
                               multiplicity_hint=int(mult),
                               converged=bool(best_res <= conv_tol)))
    return sort_pairs_by_target(pairs, cfg.target_sigma)


def _t_vector_candidates(t: TridiagMatrix, lam: float, mult: int) -> list:
    """Candidate T eigenvectors whose lift approximates the eigenvector.

    A value replicated m times leaves an m-dimensional near-null space of
    T - lam I; an arbitrary inverse-iteration vector mixes the copies and a
    mixed lift has a residual of order beta_K |s_K|.  Combining a null basis
    to zero the last component recovers the converged Ritz direction, so that
    combination is offered first, with the raw basis vectors as fallbacks.
    """
    first = tridiag_eigvec_for_value(t, lam, attempt=0)
    if mult <= 1:
        return [first, tridiag_eigvec_for_value(t, lam, attempt=1)]
    basis = [first]
    for attempt in range(1, min(mult, 3) + 2):
        s = tridiag_eigvec_for_value(t, lam, attempt=attempt)
        for b in basis:
            s = s - b * (b @ s)
        nrm = float(np.linalg.norm(s))
        if nrm > 1e-3:
            basis.append(s / nrm)
        if len(basis) >= min(mult, 3):
            break
    cands = []
    last = np.array([b[-1] for b in basis])
    jmax = int(np.argmax(np.abs(last)))
    if abs(last[jmax]) > 1e-300 and len(basis) > 1:
        for i in range(len(basis)):
            if i == jmax:
                continue
            c = basis[i] - basis[jmax] * (last[i] / last[jmax])
            nrm = float(np.linalg.norm(c))
            if nrm > 1e-8:
                cands.append(c / nrm)
    return cands + basis


def _lift_ritz_vectors(op, v1, steps, svecs: np.ndarray) -> np.ndarray:
    """Second identical Lanczos pass accumulating x_j = sum_i v_i s_j[i]."""
    n = op.dimension
    out = np.zeros((n, svecs.shape[1]))

    def accumulate(i, v):
        out[:] += np.outer(v, svecs[i, :])

    lanczos_run(op, v1, steps, reorth=False, on_vector=accumulate)
    return out


def _finalize_vector(a, lam, x):
    nrm = float(np.linalg.norm(x))
    if nrm == 0.0 or not np.isfinite(nrm):
        return np.inf, x
    x = x / nrm
    resid = float(np.linalg.norm(sym_matvec(a, x) - lam * x))
    return resid, x
