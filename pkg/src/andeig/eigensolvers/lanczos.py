"""Three-term Lanczos recurrence and tridiagonal eigen-extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng
from .._kernels import tridiag_lu_solve, tridiag_shifted_lu
from ..dense import tridiag_eigenvalues, tridiag_eigenvectors
from ..krylov import LinearOperator
from .types import TridiagMatrix

_EPS = float(np.finfo(np.float64).eps)


@dataclass
class LanczosResult:
    t: TridiagMatrix
    basis: np.ndarray | None
    breakdown: bool
    steps_done: int


def lanczos_run(op: LinearOperator, v1: np.ndarray, steps: int,
                reorth: bool, on_vector=None) -> LanczosResult:
    """Runs the recurrence beta_{i+1} v_{i+1} = A v_i - alpha_i v_i - beta_i v_{i-1}.

    With reorth=True an orthonormal basis is kept and each new vector is fully
    reorthogonalized (twice) against it; with reorth=False no basis is stored
    so arbitrarily long runs cost two vectors of memory.  ``on_vector(i, v)``
    observes each basis vector as it is produced (it must not modify v), which
    lets a second identical run rebuild Ritz vectors without storage.

    A vanishing beta stops the run early with breakdown=True: the Krylov
    space is exactly invariant.
    """
    n = op.dimension
    v = np.asarray(v1, dtype=np.float64)
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        raise ValueError("starting vector must be nonzero")
    v = v / nrm
    v_prev = np.zeros(n)
    beta_prev = 0.0
    alphas = []
    betas = []
    basis = np.empty((n, steps)) if reorth else None
    breakdown = False
    scale = 0.0
    for i in range(steps):
        if reorth:
            basis[:, i] = v
        if on_vector is not None:
            on_vector(i, v)
        w = op(v)
        alpha = float(v @ w)
        alphas.append(alpha)
        scale = max(scale, abs(alpha) + beta_prev)
        if i == steps - 1:
            break
        w = w - alpha * v - beta_prev * v_prev
        if reorth:
            vb = basis[:, :i + 1]
            w -= vb @ (vb.T @ w)
            w -= vb @ (vb.T @ w)
        beta = float(np.linalg.norm(w))
        if beta <= 1e3 * _EPS * max(scale, 1.0):
            breakdown = True
            break
        betas.append(beta)
        v_prev = v
        v = w / beta
        beta_prev = beta
    t = TridiagMatrix(np.array(alphas), np.array(betas))
    if reorth:
        basis = basis[:, :len(alphas)]
    return LanczosResult(t=t, basis=basis, breakdown=breakdown, steps_done=len(alphas))


def tridiag_eig(t: TridiagMatrix, want_vectors: bool = False):
    """Eigenvalues (ascending) of a tridiagonal matrix, optionally vectors."""
    w = tridiag_eigenvalues(t.alpha, t.beta)
    if not want_vectors:
        return w, None
    if t.order == 1:
        return w, np.ones((1, 1))
    z = tridiag_eigenvectors(t.alpha, t.beta, w)
    return w, z


def tridiag_eigvec_for_value(t: TridiagMatrix, lam: float, attempt: int = 0) -> np.ndarray:
    """One unit eigenvector of T for an (accurate) eigenvalue lam.

    Inverse iteration with a seeded random start; ``attempt`` switches to a
    different start vector, useful when a replicated eigenvalue gives a
    near-2D null space and one combination is wanted over another.
    """
    k = t.order
    if k == 1:
        return np.ones(1)
    norm_t = max(t.norm_bound(), _EPS)
    safe = _EPS * norm_t
    dl, dd, du, du2, piv = tridiag_shifted_lu(t.alpha, t.beta, lam, safe)
    x = rng.uniform01(0xC0FEE + attempt, k, start=attempt * k) - 0.5
    x /= np.linalg.norm(x)
    for _ in range(4):
        x = tridiag_lu_solve(dl, dd, du, du2, piv, x)
        nrm = float(np.linalg.norm(x))
        if not np.isfinite(nrm) or nrm == 0.0:
            x = rng.uniform01(0xC0FEE + attempt + 7, k) - 0.5
            x /= np.linalg.norm(x)
            continue
        x /= nrm
        resid = _tridiag_resid(t, lam, x)
        if resid <= 1e4 * _EPS * norm_t:
            break
    return x


def _tridiag_resid(t: TridiagMatrix, lam: float, x: np.ndarray) -> float:
    y = t.alpha * x - lam * x
    if t.order > 1:
        y[:-1] += t.beta * x[1:]
        y[1:] += t.beta * x[:-1]
    return float(np.linalg.norm(y))
