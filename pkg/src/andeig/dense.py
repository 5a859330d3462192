"""Dense symmetric eigensolver and dense LDL^T factorization.

These are the in-repo verification and finishing tools: no LAPACK driver is
called, so results are reproducible from the source alone.  The eigensolver
runs Householder tridiagonalization, implicit-shift QL for the values, and
pivoted-LU inverse iteration with clustered Gram-Schmidt for the vectors.
The LDL^T factorization uses Bunch-Kaufman 1x1/2x2 pivoting and finishes the
multilevel preconditioner's last Schur complement.
"""

from __future__ import annotations

import math

import numpy as np

from . import rng
from ._kernels import (
    tridiag_lu_solve,
    tridiag_ql_values,
    tridiag_ql_vectors,
    tridiag_shifted_lu,
)

_EPS = float(np.finfo(np.float64).eps)
_IISEED = 0x1D5EED  # fixed internal seed for inverse-iteration start vectors


def householder_tridiagonalize(a: np.ndarray, want_q: bool = True):
    """Reduces symmetric ``a`` to tridiagonal T = Q^T A Q.

    Returns (d, e, q) with d the diagonal, e the subdiagonal, and q the
    accumulated orthogonal transform (or None when want_q is False).
    """
    A = np.array(a, dtype=np.float64)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    reflectors = []
    for k in range(n - 2):
        x = A[k + 1:, k]
        normx = float(np.linalg.norm(x))
        if normx == 0.0:
            reflectors.append(None)
            continue
        alpha = -math.copysign(normx, x[0])
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)
        sub = A[k + 1:, k + 1:]
        p = sub @ v
        w = 2.0 * (p - (v @ p) * v)
        sub -= np.outer(v, w) + np.outer(w, v)
        A[k + 1, k] = alpha
        A[k, k + 1] = alpha
        A[k + 2:, k] = 0.0
        A[k, k + 2:] = 0.0
        reflectors.append(v)
    d = np.diag(A).copy()
    e = np.diag(A, -1).copy()
    q = None
    if want_q:
        q = np.eye(n)
        for k in range(n - 3, -1, -1):
            v = reflectors[k]
            if v is None:
                continue
            block = q[k + 1:, :]
            block -= 2.0 * np.outer(v, v @ block)
    return d, e, q


def _tridiag_apply(d, e, x):
    y = d * x
    if len(d) > 1:
        y[:-1] += e * x[1:]
        y[1:] += e * x[:-1]
    return y


def tridiag_eigenvalues(d, e) -> np.ndarray:
    """All eigenvalues of a symmetric tridiagonal matrix, sorted ascending."""
    dd = np.ascontiguousarray(d, dtype=np.float64).copy()
    ee = np.ascontiguousarray(e, dtype=np.float64).copy()
    status = tridiag_ql_values(dd, ee)
    if status != 0:
        raise RuntimeError("QL iteration failed to converge")
    dd.sort()
    return dd


def tridiag_eigenvectors(d, e, eigenvalues, group_tol=None) -> np.ndarray:
    """Eigenvectors for precomputed tridiagonal eigenvalues via inverse iteration.

    Eigenvalues must be sorted ascending.  Values closer than ``group_tol``
    are treated as a cluster: shifts get tiny separating perturbations and the
    vectors are orthogonalized inside the cluster.
    """
    d = np.ascontiguousarray(d, dtype=np.float64)
    e = np.ascontiguousarray(e, dtype=np.float64)
    n = len(d)
    w = np.asarray(eigenvalues, dtype=np.float64)
    norm_t = float(np.max(np.abs(d))) if n else 0.0
    if n > 1 and len(e):
        norm_t += 2.0 * float(np.max(np.abs(e)))
    norm_t = max(norm_t, _EPS)
    if group_tol is None:
        group_tol = 1e-7 * norm_t
    safe_pivot = _EPS * norm_t
    res_tol = max(100.0, 10.0 * math.sqrt(n)) * _EPS * norm_t
    z = np.empty((n, len(w)))
    group_start = 0
    draw = 0
    for j in range(len(w)):
        if j > 0 and (w[j] - w[j - 1]) > group_tol:
            group_start = j
        lam = w[j] + (j - group_start) * 10.0 * _EPS * norm_t
        dl, dd, du, du2, piv = tridiag_shifted_lu(d, e, lam, safe_pivot)
        b = rng.uniform01(_IISEED, n, start=draw * n) - 0.5
        draw += 1
        x = b / np.linalg.norm(b)
        ok = False
        for _ in range(6):
            x = tridiag_lu_solve(dl, dd, du, du2, piv, x)
            nrm = float(np.linalg.norm(x))
            if not np.isfinite(nrm) or nrm == 0.0:
                b = rng.uniform01(_IISEED, n, start=draw * n) - 0.5
                draw += 1
                x = b / np.linalg.norm(b)
                continue
            x /= nrm
            if j > group_start:
                grp = z[:, group_start:j]
                x -= grp @ (grp.T @ x)
                x -= grp @ (grp.T @ x)
                nrm = float(np.linalg.norm(x))
                if nrm < 1e-2:
                    b = rng.uniform01(_IISEED, n, start=draw * n) - 0.5
                    draw += 1
                    x = b / np.linalg.norm(b)
                    continue
                x /= nrm
            resid = float(np.linalg.norm(_tridiag_apply(d, e, x) - w[j] * x))
            if resid <= res_tol:
                ok = True
                break
        if not ok:
            # fall back to the rotation-accumulating QL path for this matrix
            return _tridiag_vectors_ql(d, e, w)
        z[:, j] = x
    return z


def _tridiag_vectors_ql(d, e, w):
    """Full QL-with-rotations eigenvector path (robust fallback, O(n^3))."""
    dd = d.copy()
    ee = e.copy()
    z = np.eye(len(d))
    status = tridiag_ql_vectors(dd, ee, z)
    if status != 0:
        raise RuntimeError("QL iteration failed to converge")
    order = np.argsort(dd, kind="stable")
    z = z[:, order]
    if len(w) == len(d):
        return z
    # a subset was requested: pair each value with an unused sorted column
    dd_sorted = dd[order]
    cols = []
    used = -1
    for lam in w:
        start = int(np.searchsorted(dd_sorted, lam))
        pick = max(min(start, len(dd_sorted) - 1), used + 1)
        if pick - 1 > used and abs(dd_sorted[pick - 1] - lam) < abs(dd_sorted[pick] - lam):
            pick = pick - 1
        used = pick
        cols.append(pick)
    return z[:, cols]


def dense_eig(a: np.ndarray, want_vectors: bool = True):
    """All eigenpairs of a dense symmetric matrix, eigenvalues ascending.

    Returns (w, v) with v's columns the orthonormal eigenvectors, or
    (w, None) when want_vectors is False.
    """
    A = np.asarray(a, dtype=np.float64)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if n == 0:
        return np.zeros(0), np.zeros((0, 0)) if want_vectors else None
    if not np.allclose(A, A.T, atol=1e-12 * max(1.0, float(np.abs(A).max()))):
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    if n == 1:
        w = np.array([A[0, 0]])
        return (w, np.ones((1, 1))) if want_vectors else (w, None)
    d, e, q = householder_tridiagonalize(A, want_q=want_vectors)
    w = tridiag_eigenvalues(d, e)
    if not want_vectors:
        return w, None
    z = tridiag_eigenvectors(d, e, w)
    return w, q @ z


# ---------------------------------------------------------------------------
# dense symmetric indefinite LDL^T with Bunch-Kaufman pivoting

_BK_ALPHA = (1.0 + math.sqrt(17.0)) / 8.0


class SingularMatrixError(RuntimeError):
    """Raised when a factorization meets an exactly singular pivot."""


def sym_indef_factor(a: np.ndarray):
    """LDL^T of a dense symmetric matrix with Bunch-Kaufman pivoting.

    Returns (lf, piv): lf holds the unit lower factor below the diagonal and
    the 1x1/2x2 blocks of D on/next to it.  piv[k] >= 0 records a 1x1 pivot
    interchange; piv[k] = piv[k+1] = -(p+1) records a 2x2 block whose second
    row was swapped with p.
    """
    A = np.array(a, dtype=np.float64)
    n = A.shape[0]
    piv = np.zeros(n, dtype=np.int64)
    k = 0
    while k < n:
        kstep = 1
        absakk = abs(A[k, k])
        if k < n - 1:
            imax = k + 1 + int(np.argmax(np.abs(A[k + 1:, k])))
            colmax = abs(A[imax, k])
        else:
            imax = k
            colmax = 0.0
        if max(absakk, colmax) == 0.0:
            raise SingularMatrixError(f"zero pivot column at step {k}")
        if absakk >= _BK_ALPHA * colmax:
            kp = k
        else:
            rowmax = float(np.max(np.abs(A[imax, k:imax]))) if imax > k else 0.0
            if imax < n - 1:
                rowmax = max(rowmax, float(np.max(np.abs(A[imax + 1:, imax]))))
            if absakk * rowmax >= _BK_ALPHA * colmax * colmax:
                kp = k
            elif abs(A[imax, imax]) >= _BK_ALPHA * rowmax:
                kp = imax
            else:
                kp = imax
                kstep = 2
        kk = k + kstep - 1
        if kp != kk:
            A[kp + 1:, [kk, kp]] = A[kp + 1:, [kp, kk]]
            tmp = A[kk + 1:kp, kk].copy()
            A[kk + 1:kp, kk] = A[kp, kk + 1:kp]
            A[kp, kk + 1:kp] = tmp
            A[kk, kk], A[kp, kp] = A[kp, kp], A[kk, kk]
            if kstep == 2:
                A[kk, k], A[kp, k] = A[kp, k], A[kk, k]
        if kstep == 1:
            if A[k, k] == 0.0:
                raise SingularMatrixError(f"zero 1x1 pivot at step {k}")
            r1 = 1.0 / A[k, k]
            col = A[k + 1:, k]
            A[k + 1:, k + 1:] -= r1 * np.outer(col, col)
            A[k + 1:, k] *= r1
        else:
            d21 = A[k + 1, k]
            if d21 == 0.0:
                raise SingularMatrixError(f"zero 2x2 coupling at step {k}")
            d11 = A[k + 1, k + 1] / d21
            d22 = A[k, k] / d21
            t = d11 * d22 - 1.0
            if abs(t * d21 * d21) < 1e-300:
                raise SingularMatrixError(f"singular 2x2 pivot at step {k}")
            t = 1.0 / t
            dfac = t / d21
            if k < n - 2:
                wk = dfac * (d11 * A[k + 2:, k] - A[k + 2:, k + 1])
                wkp1 = dfac * (d22 * A[k + 2:, k + 1] - A[k + 2:, k])
                A[k + 2:, k + 2:] -= np.outer(A[k + 2:, k], wk) + np.outer(A[k + 2:, k + 1], wkp1)
                A[k + 2:, k] = wk
                A[k + 2:, k + 1] = wkp1
        if kstep == 1:
            piv[k] = kp
        else:
            piv[k] = -(kp + 1)
            piv[k + 1] = -(kp + 1)
        k += kstep
    return A, piv


def sym_indef_solve(lf: np.ndarray, piv: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solves A x = b given the factorization from sym_indef_factor."""
    n = lf.shape[0]
    x = np.array(b, dtype=np.float64)
    k = 0
    while k < n:
        if piv[k] >= 0:
            kp = piv[k]
            if kp != k:
                x[k], x[kp] = x[kp], x[k]
            x[k + 1:] -= lf[k + 1:, k] * x[k]
            x[k] /= lf[k, k]
            k += 1
        else:
            kp = -piv[k] - 1
            if kp != k + 1:
                x[k + 1], x[kp] = x[kp], x[k + 1]
            if k < n - 2:
                x[k + 2:] -= lf[k + 2:, k] * x[k]
                x[k + 2:] -= lf[k + 2:, k + 1] * x[k + 1]
            akm1k = lf[k + 1, k]
            akm1 = lf[k, k] / akm1k
            ak = lf[k + 1, k + 1] / akm1k
            denom = akm1 * ak - 1.0
            bkm1 = x[k] / akm1k
            bk = x[k + 1] / akm1k
            x[k] = (ak * bkm1 - bk) / denom
            x[k + 1] = (akm1 * bk - bkm1) / denom
            k += 2
    k = n - 1
    while k >= 0:
        if piv[k] >= 0:
            if k < n - 1:
                x[k] -= lf[k + 1:, k] @ x[k + 1:]
            kp = piv[k]
            if kp != k:
                x[k], x[kp] = x[kp], x[k]
            k -= 1
        else:
            if k < n - 1:
                x[k] -= lf[k + 1:, k] @ x[k + 1:]
                x[k - 1] -= lf[k + 1:, k - 1] @ x[k + 1:]
            kp = -piv[k] - 1
            if kp != k:
                x[k], x[kp] = x[kp], x[k]
            k -= 2
    return x


def sym_indef_nnz(lf: np.ndarray, piv: np.ndarray) -> int:
    """Stored nonzeros of the dense factorization (L multipliers + D blocks)."""
    n = lf.shape[0]
    count = 0
    k = 0
    while k < n:
        if piv[k] >= 0:
            count += 1 + int(np.count_nonzero(lf[k + 1:, k]))
            k += 1
        else:
            count += 3
            count += int(np.count_nonzero(lf[k + 2:, k]))
            count += int(np.count_nonzero(lf[k + 2:, k + 1]))
            k += 2
    return count
