import numpy as np
import pytest

import andeig as ae
from andeig import (
    FactorParams,
    LinearOperator,
    SparseSymMatrix,
    factorize,
    make_jd_operator,
    make_jd_preconditioner,
    sqmr_solve,
    sym_matvec,
    to_dense,
)

from conftest import connected_random_sym


class TestSqmr:
    def test_identity_one_iteration(self):
        op = LinearOperator.identity(6)
        b = np.arange(1.0, 7.0)
        x, rep = sqmr_solve(op, None, b)
        assert rep.converged and rep.iterations == 1
        assert np.allclose(x, b, atol=1e-12)

    def test_indefinite_diagonal(self):
        # b = (1,1) makes q^T A q vanish exactly at the first step, so this
        # also exercises the perturbed-restart path; the perturbed 2-step
        # Krylov space is still the whole plane
        a = SparseSymMatrix.diagonal([1.0, -1.0])
        op = LinearOperator.from_matrix(a)
        b = np.array([1.0, 1.0])
        x, rep = sqmr_solve(op, None, b)
        assert rep.converged and rep.iterations <= 4
        assert np.allclose(x, [1.0, -1.0], atol=1e-10)

    def test_exact_preconditioner_immediate(self):
        a = ae.build_anderson(ae.AndersonConfig(m=8, w=16.5, seed=1))
        f = factorize(a, FactorParams(epsilon=0.0, enable_aggressive_drop=False))
        op = LinearOperator.from_matrix(a)
        b = ae.rng.uniform01(3, a.n) - 0.5
        x, rep = sqmr_solve(op, LinearOperator.from_factor(f), b, tol=1e-10)
        assert rep.converged and rep.iterations <= 2
        assert np.linalg.norm(sym_matvec(a, x) - b) <= 1e-10 * np.linalg.norm(b)

    def test_exact_preconditioner_random_instances(self):
        for seed in (0, 1, 2):
            n = 60 + 80 * seed
            a = connected_random_sym(n, seed=seed)
            f = factorize(a, FactorParams(epsilon=0.0, enable_aggressive_drop=False,
                                          small_block_cutoff=max(4, n // 6)))
            op = LinearOperator.from_matrix(a)
            b = np.random.RandomState(seed).randn(n)
            x, rep = sqmr_solve(op, LinearOperator.from_factor(f), b, tol=1e-10)
            assert rep.converged and rep.iterations <= 3

    def test_converged_report_consistent(self):
        a = connected_random_sym(120, seed=5)
        f = factorize(a, FactorParams(small_block_cutoff=30))
        op = LinearOperator.from_matrix(a)
        b = np.random.RandomState(9).randn(120)
        x, rep = sqmr_solve(op, LinearOperator.from_factor(f), b, tol=1e-9, maxit=500)
        assert rep.converged
        true_res = np.linalg.norm(sym_matvec(a, x) - b) / np.linalg.norm(b)
        assert true_res <= 1e-9
        assert abs(true_res - rep.final_relative_residual) <= 1e-8

    def test_zero_rhs(self):
        op = LinearOperator.identity(4)
        x, rep = sqmr_solve(op, None, np.zeros(4))
        assert rep.converged and rep.iterations == 0
        assert np.array_equal(x, np.zeros(4))

    def test_maxit_reported_not_converged(self):
        a = connected_random_sym(150, seed=6)
        op = LinearOperator.from_matrix(a)
        b = np.random.RandomState(1).randn(150)
        x, rep = sqmr_solve(op, None, b, tol=1e-14, maxit=3)
        assert not rep.converged
        assert rep.iterations == 3

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sqmr_solve(LinearOperator.identity(3), None, np.ones(4))


class TestJdOperator:
    def test_empty_basis_is_shifted_matrix(self):
        a = connected_random_sym(10, seed=0)
        op = make_jd_operator(a, 0.7, None)
        z = np.random.RandomState(0).randn(10)
        ref = sym_matvec(a, z) - 0.7 * z
        assert np.allclose(op(z), ref, atol=1e-14)

    def test_annihilates_basis(self):
        a = connected_random_sym(12, seed=1)
        rs = np.random.RandomState(2)
        q, _ = np.linalg.qr(rs.randn(12, 3))
        op = make_jd_operator(a, 0.0, q)
        z = q @ rs.randn(3)
        assert np.linalg.norm(op(z)) <= 1e-10

    def test_output_orthogonal_to_basis(self):
        a = connected_random_sym(12, seed=3)
        rs = np.random.RandomState(4)
        q, _ = np.linalg.qr(rs.randn(12, 2))
        op = make_jd_operator(a, 0.3, q)
        for _ in range(3):
            z = rs.randn(12)
            assert np.abs(q.T @ op(z)).max() <= 1e-10

    def test_symmetric_on_probes(self):
        a = connected_random_sym(15, seed=5)
        rs = np.random.RandomState(6)
        q, _ = np.linalg.qr(rs.randn(15, 2))
        op = make_jd_operator(a, -0.2, q)
        for _ in range(3):
            u, v = rs.randn(15), rs.randn(15)
            assert abs(op(u) @ v - u @ op(v)) <= 1e-10

    def test_non_orthonormal_rejected(self):
        a = connected_random_sym(8, seed=7)
        bad = np.ones((8, 2))
        with pytest.raises(ValueError):
            make_jd_operator(a, 0.0, bad)


class TestJdPreconditioner:
    def test_identity_factor_projects(self):
        f = factorize(ae.SparseSymMatrix.identity(9))
        u = np.random.RandomState(0).randn(9)
        u /= np.linalg.norm(u)
        precond = make_jd_preconditioner(f, u)
        assert np.linalg.norm(precond(u.copy())) <= 1e-12

    def test_unusable_u_rejected(self):
        # u^T K^{-1} u = 0 for the indefinite K = diag(1, -1) and u = (1,1)
        f = factorize(ae.SparseSymMatrix.diagonal([1.0, -1.0]))
        u = np.array([1.0, 1.0]) / np.sqrt(2.0)
        with pytest.raises(ValueError):
            make_jd_preconditioner(f, u)

    def test_output_orthogonal_to_u(self):
        a = connected_random_sym(40, seed=8)
        f = factorize(a, FactorParams(small_block_cutoff=10))
        rs = np.random.RandomState(1)
        u = rs.randn(40)
        u /= np.linalg.norm(u)
        precond = make_jd_preconditioner(f, u)
        for _ in range(4):
            out = precond(rs.randn(40))
            assert abs(u @ out) <= 1e-10 * np.linalg.norm(out)

    def test_correction_equation_with_exact_preconditioner(self):
        # small dense instance: K = A - theta*I factored exactly and u a
        # slightly perturbed eigenvector; the preconditioned projected
        # operator acts like the identity on the u-orthogonal subspace, so
        # the correction solve needs only a handful of iterations
        a = connected_random_sym(30, seed=9)
        w, v = ae.dense_eig(to_dense(a))
        pick = int(np.argmin(np.abs(w)))
        u = v[:, pick] + 1e-3 * v[:, (pick + 1) % 30]
        u /= np.linalg.norm(u)
        theta = float(u @ sym_matvec(a, u))
        shifted_vals = a.values.copy()
        shifted_vals[a.row_starts[1:] - 1] -= theta
        shifted = SparseSymMatrix(a.n, a.row_starts, a.col_indices, shifted_vals)
        k = factorize(shifted, FactorParams(epsilon=0.0, enable_aggressive_drop=False))
        op = make_jd_operator(a, theta, u.reshape(-1, 1))
        precond = make_jd_preconditioner(k, u)
        r = sym_matvec(a, u) - theta * u
        r -= u * (u @ r)
        assert np.linalg.norm(r) > 1e-6
        z, rep = sqmr_solve(op, precond, -r, tol=1e-10, maxit=50)
        assert rep.converged and rep.iterations <= 5
        assert abs(u @ z) <= 1e-8 * np.linalg.norm(z)
