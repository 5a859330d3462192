"""Numba-compiled numerical kernels.

Everything here is algorithmically self-contained (no LAPACK/BLAS calls):
tridiagonal implicit-shift QL, pivoted tridiagonal LU for inverse iteration,
CSR matrix-vector products, and the packed triangular/block-diagonal solves
used by the multilevel preconditioner.  Keeping these in explicit loops makes
results independent of any external solver library.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_EPS = float(np.finfo(np.float64).eps)


@njit(cache=True)
def tridiag_ql_values(d, e):
    """Eigenvalues of a symmetric tridiagonal matrix, implicit-shift QL.

    d (n,) diagonal and e (n-1,) subdiagonal are overwritten; on return d
    holds the eigenvalues (unsorted).  Returns 0 on success, >0 if some
    eigenvalue needed more than 80 sweeps (does not happen in practice).
    """
    n = d.shape[0]
    if n <= 1:
        return 0
    ee = np.zeros(n)
    for i in range(n - 1):
        ee[i] = e[i]
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(ee[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 80:
                return l + 1
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            r = math.hypot(g, 1.0)
            sgn = r if g >= 0.0 else -r
            g = d[m] - d[l] + ee[l] / (g + sgn)
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * ee[i]
                b = c * ee[i]
                r = math.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            if underflow:
                continue
            d[l] -= p
            ee[l] = g
            ee[m] = 0.0
    return 0


@njit(cache=True)
def tridiag_ql_vectors(d, e, z):
    """Implicit-shift QL with eigenvector accumulation.

    z (m, n) enters as the basis to rotate (identity for tridiagonal
    eigenvectors); column k of z leaves as the eigenvector for d[k].
    """
    n = d.shape[0]
    if n == 0:
        return 0
    if n == 1:
        return 0
    ee = np.zeros(n)
    for i in range(n - 1):
        ee[i] = e[i]
    nz = z.shape[0]
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(ee[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 80:
                return l + 1
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            r = math.hypot(g, 1.0)
            sgn = r if g >= 0.0 else -r
            g = d[m] - d[l] + ee[l] / (g + sgn)
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * ee[i]
                b = c * ee[i]
                r = math.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                for k in range(nz):
                    f2 = z[k, i + 1]
                    z[k, i + 1] = s * z[k, i] + c * f2
                    z[k, i] = c * z[k, i] - s * f2
            if underflow:
                continue
            d[l] -= p
            ee[l] = g
            ee[m] = 0.0
    return 0


@njit(cache=True)
def tridiag_shifted_lu(alpha, beta, lam, safe_pivot):
    """LU with partial pivoting of (T - lam*I) for tridiagonal T.

    Returns (dl, dd, du, du2, piv); zero pivots are replaced by
    ``safe_pivot`` so inverse iteration can proceed at exact eigenvalues.
    """
    n = alpha.shape[0]
    dl = np.zeros(n)
    dd = np.empty(n)
    du = np.zeros(n)
    du2 = np.zeros(n)
    piv = np.zeros(n, dtype=np.int64)
    for i in range(n):
        dd[i] = alpha[i] - lam
    for i in range(n - 1):
        dl[i] = beta[i]
        du[i] = beta[i]
    for i in range(n - 1):
        if abs(dd[i]) >= abs(dl[i]):
            if dd[i] == 0.0:
                dd[i] = safe_pivot
            f = dl[i] / dd[i]
            dl[i] = f
            dd[i + 1] -= f * du[i]
            piv[i] = i
        else:
            f = dd[i] / dl[i]
            dd[i] = dl[i]
            dl[i] = f
            tmp = du[i]
            du[i] = dd[i + 1]
            dd[i + 1] = tmp - f * dd[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -f * du[i + 1]
            piv[i] = i + 1
    if dd[n - 1] == 0.0:
        dd[n - 1] = safe_pivot
    return dl, dd, du, du2, piv


@njit(cache=True)
def tridiag_lu_solve(dl, dd, du, du2, piv, b):
    """Solves the system factored by tridiag_shifted_lu; returns x."""
    n = dd.shape[0]
    x = b.copy()
    for i in range(n - 1):
        if piv[i] == i:
            x[i + 1] -= dl[i] * x[i]
        else:
            tmp = x[i]
            x[i] = x[i + 1]
            x[i + 1] = tmp - dl[i] * x[i]
    x[n - 1] /= dd[n - 1]
    if n > 1:
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / dd[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / dd[i]
    return x


@njit(cache=True)
def csr_matvec(indptr, indices, data, x, y):
    """y = A x for CSR A."""
    n = indptr.shape[0] - 1
    for i in range(n):
        s = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            s += data[k] * x[indices[k]]
        y[i] = s


@njit(cache=True)
def csr_matvec_transpose(indptr, indices, data, x, y):
    """y = A^T x for CSR A (y must be zeroed by the caller)."""
    n = indptr.shape[0] - 1
    for i in range(n):
        xi = x[i]
        if xi != 0.0:
            for k in range(indptr[i], indptr[i + 1]):
                y[indices[k]] += data[k] * xi


@njit(cache=True)
def unit_lower_solve(colptr, rows, vals, x):
    """In-place solve L x = b for unit lower triangular L in packed CSC."""
    n = colptr.shape[0] - 1
    for j in range(n):
        xj = x[j]
        if xj != 0.0:
            for k in range(colptr[j], colptr[j + 1]):
                x[rows[k]] -= vals[k] * xj


@njit(cache=True)
def unit_lower_solve_transpose(colptr, rows, vals, x):
    """In-place solve L^T x = b for unit lower triangular L in packed CSC."""
    n = colptr.shape[0] - 1
    for j in range(n - 1, -1, -1):
        s = 0.0
        for k in range(colptr[j], colptr[j + 1]):
            s += vals[k] * x[rows[k]]
        x[j] -= s


@njit(cache=True)
def block_diag_solve(sizes, vals, x):
    """In-place solve D x = b for packed 1x1/2x2 symmetric block diagonal D.

    vals holds one entry per 1x1 block and (a, b, d) per 2x2 block [[a,b],[b,d]].
    """
    i = 0
    p = 0
    for t in range(sizes.shape[0]):
        if sizes[t] == 1:
            x[i] = x[i] / vals[p]
            i += 1
            p += 1
        else:
            a = vals[p]
            b = vals[p + 1]
            dd = vals[p + 2]
            det = a * dd - b * b
            r1 = x[i]
            r2 = x[i + 1]
            x[i] = (dd * r1 - b * r2) / det
            x[i + 1] = (a * r2 - b * r1) / det
            i += 2
            p += 3


@njit(cache=True)
def greedy_inverse_colnorms(colptr, rows, vals):
    """Per-column estimates of the inverse of unit lower triangular L.

    Solves L^T z = b with b_j in {+1,-1} chosen to maximize |z_j|; |z_i| is a
    lower estimate of the 1-norm of column i of L^{-1} (>= 1 always).
    """
    n = colptr.shape[0] - 1
    z = np.empty(n)
    nu = np.empty(n)
    for j in range(n - 1, -1, -1):
        s = 0.0
        for k in range(colptr[j], colptr[j + 1]):
            s += vals[k] * z[rows[k]]
        if s > 0.0:
            zj = -1.0 - s
        else:
            zj = 1.0 - s
        z[j] = zj
        nu[j] = abs(zj)
    return nu
