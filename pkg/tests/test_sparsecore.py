import numpy as np
import pytest

import andeig as ae
from andeig import (
    MatrixFormatError,
    Permutation,
    DiagScaling,
    SparseSymMatrix,
    dense_eig,
    permute_sym,
    read_matrix_market,
    scale_sym,
    sym_matvec,
    to_dense,
    write_matrix_market,
)

from conftest import random_sparse_sym


class TestSymMatvec:
    def test_identity(self):
        a = SparseSymMatrix.identity(3)
        x = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(sym_matvec(a, x), x)

    def test_swap_matrix(self):
        a = SparseSymMatrix.from_coo(2, [0, 1, 1], [0, 0, 1], [0.0, 1.0, 0.0])
        assert np.array_equal(sym_matvec(a, np.array([1.0, 0.0])), [0.0, 1.0])

    def test_clean_anderson_rows_sum_to_six(self):
        a = ae.build_anderson(ae.AndersonConfig(m=3, w=0.0))
        y = sym_matvec(a, np.ones(27))
        assert np.allclose(y, 6.0, atol=0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sym_matvec(SparseSymMatrix.identity(3), np.ones(4))

    def test_agrees_with_dense_multiply(self):
        for seed in range(6):
            n = 20 + 30 * seed
            a = random_sparse_sym(n, seed=seed)
            x = np.random.RandomState(seed + 100).randn(n)
            dense = to_dense(a)
            ref = dense @ x
            got = sym_matvec(a, x)
            scale = max(1.0, np.linalg.norm(ref))
            assert np.linalg.norm(got - ref) <= 1e-13 * scale


class TestPermuteScale:
    def test_identity_permutation_bitwise(self):
        a = random_sparse_sym(15, seed=3)
        b = permute_sym(a, Permutation.identity(15))
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.col_indices, b.col_indices)
        assert np.array_equal(a.row_starts, b.row_starts)

    def test_swap_on_diagonal(self):
        a = SparseSymMatrix.diagonal([1.0, 2.0])
        p = Permutation.from_forward([1, 0])
        b = permute_sym(a, p)
        assert np.array_equal(np.diag(to_dense(b)), [2.0, 1.0])

    def test_spectrum_preserved(self, figure_pattern):
        p = ae.symmetric_matching(figure_pattern).p_s
        a = random_sparse_sym(6, seed=9)
        b = permute_sym(a, p)
        wa, _ = dense_eig(to_dense(a), want_vectors=False)
        wb, _ = dense_eig(to_dense(b), want_vectors=False)
        assert np.abs(wa - wb).max() <= 1e-12

    def test_permute_matches_dense_conjugation(self):
        a = random_sparse_sym(12, seed=5)
        order = np.random.RandomState(1).permutation(12)
        p = Permutation.from_forward(order)
        got = to_dense(permute_sym(a, p))
        dense = to_dense(a)
        ref = dense[np.ix_(p.inverse, p.inverse)]
        assert np.array_equal(got, ref)

    def test_scale_ones_unchanged(self):
        a = random_sparse_sym(9, seed=2)
        b = scale_sym(a, DiagScaling.ones(9))
        assert np.array_equal(a.values, b.values)

    def test_scale_forces_unit_diagonal(self):
        a = SparseSymMatrix.diagonal([4.0])
        b = scale_sym(a, DiagScaling(np.array([0.5])))
        assert np.array_equal(b.values, [1.0])

    def test_scale_preserves_inertia(self):
        a = random_sparse_sym(40, seed=11)
        d = DiagScaling(np.random.RandomState(2).uniform(0.2, 3.0, 40))
        wa, _ = dense_eig(to_dense(a), want_vectors=False)
        wb, _ = dense_eig(to_dense(scale_sym(a, d)), want_vectors=False)
        assert np.sum(wa > 0) == np.sum(wb > 0)
        assert np.sum(wa < 0) == np.sum(wb < 0)

    def test_nonpositive_scale_rejected(self):
        with pytest.raises(ValueError):
            DiagScaling(np.array([1.0, 0.0]))


class TestMatrixMarket:
    def test_one_by_one_round_trip(self, tmp_path):
        a = SparseSymMatrix.diagonal([5.0])
        path = tmp_path / "one.mtx"
        write_matrix_market(a, path)
        b = read_matrix_market(path)
        assert b.n == 1 and np.array_equal(b.values, [5.0])

    def test_anderson_bit_exact_round_trip(self, tmp_path):
        a = ae.build_anderson(ae.AndersonConfig(m=4, w=16.5, seed=7))
        path = tmp_path / "a.mtx"
        write_matrix_market(a, path)
        b = read_matrix_market(path)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.col_indices, b.col_indices)
        assert np.array_equal(a.row_starts, b.row_starts)

    def test_general_header_rejected(self, tmp_path):
        path = tmp_path / "g.mtx"
        path.write_text("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 2.0\n")
        with pytest.raises(MatrixFormatError):
            read_matrix_market(path)

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "bad.mtx"
        path.write_text("%%NotMatrixMarket nonsense\n1 1 1\n1 1 2.0\n")
        with pytest.raises(MatrixFormatError):
            read_matrix_market(path)

    def test_out_of_range_indices_rejected(self, tmp_path):
        path = tmp_path / "oob.mtx"
        path.write_text("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 2.0\n")
        with pytest.raises(MatrixFormatError):
            read_matrix_market(path)

    def test_duplicate_entries_rejected(self, tmp_path):
        path = tmp_path / "dup.mtx"
        path.write_text("%%MatrixMarket matrix coordinate real symmetric\n"
                        "2 2 2\n2 1 1.0\n2 1 3.0\n")
        with pytest.raises(MatrixFormatError):
            read_matrix_market(path)


class TestDenseOracle:
    def test_diag_sorted(self):
        w, v = dense_eig(np.diag([3.0, 1.0, 2.0]))
        assert np.array_equal(w, [1.0, 2.0, 3.0])

    def test_two_by_two_swap(self):
        w, _ = dense_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(w, [-1.0, 1.0], atol=1e-15)

    def test_clean_periodic_spectrum_with_multiplicities(self):
        for m in (3, 4, 5):
            a = ae.build_anderson(ae.AndersonConfig(m=m, w=0.0))
            w, v = dense_eig(to_dense(a))
            ref = ae.periodic_clean_spectrum(m)
            assert np.abs(w - ref).max() <= 1e-10
            dense = to_dense(a)
            resid = np.linalg.norm(dense @ v - v * w, axis=0).max()
            assert resid <= 1e-10 * a.norm1()
            assert np.abs(v.T @ v - np.eye(a.n)).max() <= 1e-8

    def test_cap_enforced(self):
        a = SparseSymMatrix.identity(5)
        with pytest.raises(ValueError):
            to_dense(a, cap=4)

    def test_residual_and_orthogonality_contracts(self):
        for seed in (0, 1):
            a = random_sparse_sym(120, seed=seed)
            dense = to_dense(a)
            w, v = dense_eig(dense)
            resid = np.linalg.norm(dense @ v - v * w, axis=0).max()
            assert resid <= 1e-10 * a.norm1()
            assert np.abs(v.T @ v - np.eye(120)).max() <= 1e-8

    def test_matches_external_reference(self):
        rs = np.random.RandomState(4)
        b = rs.randn(80, 80)
        b = b + b.T
        w, _ = dense_eig(b)
        ref = np.linalg.eigvalsh(b)
        assert np.abs(w - ref).max() <= 1e-11 * max(1.0, np.abs(ref).max())


class TestDenseLDLT:
    def test_factor_solve_random(self):
        rs = np.random.RandomState(8)
        for n in (1, 2, 7, 40):
            b = rs.randn(n, n)
            b = b + b.T
            lf, piv = ae.sym_indef_factor(b)
            rhs = rs.randn(n)
            x = ae.sym_indef_solve(lf, piv, rhs)
            assert np.linalg.norm(b @ x - rhs) <= 1e-9 * np.linalg.norm(rhs)

    def test_indefinite_with_zero_diagonal(self):
        b = np.array([[0.0, 1.0], [1.0, 0.0]])
        lf, piv = ae.sym_indef_factor(b)
        x = ae.sym_indef_solve(lf, piv, np.array([2.0, 3.0]))
        assert np.allclose(x, [3.0, 2.0])


class TestInvariantsValidation:
    def test_missing_diagonal_rejected(self):
        with pytest.raises(MatrixFormatError):
            SparseSymMatrix(2, [0, 1, 2], [0, 0], [1.0, 1.0])

    def test_duplicate_coo_rejected(self):
        with pytest.raises(MatrixFormatError):
            SparseSymMatrix.from_coo(2, [1, 0], [0, 1], [1.0, 2.0])

    def test_upper_entries_mirrored(self):
        a = SparseSymMatrix.from_coo(2, [0, 0, 1], [0, 1, 1], [1.0, 5.0, 2.0])
        dense = to_dense(a)
        assert dense[1, 0] == 5.0 and dense[0, 1] == 5.0
