import math

import numpy as np
import pytest

import andeig as ae
from andeig import (
    Block,
    CostMatrix,
    Permutation,
    SparseSymMatrix,
    StructurallySingularError,
    build_symmetric_permutation,
    compress_graph,
    cycles_of_permutation,
    expand_ordering,
    log_weight_transform,
    scale_sym,
    scaling_from_duals,
    solve_lap,
    split_cycles,
    symmetric_matching,
    to_dense,
)

from conftest import connected_random_sym
from oracles import exhaustive_lap, exhaustive_max_product


def cost_dense(c: CostMatrix) -> np.ndarray:
    out = np.full((c.n, c.n), np.inf)
    for i in range(c.n):
        cols, vals = c.row(i)
        out[i, cols] = vals
    return out


class TestLogWeightTransform:
    def test_two_entry_row(self):
        a = SparseSymMatrix.from_coo(2, [0, 1, 1], [0, 0, 1], [2.0, 1.0, 2.0])
        c = cost_dense(log_weight_transform(a))
        assert c[0, 0] == 0.0
        assert abs(c[0, 1] - math.log(2.0)) <= 1e-15
        assert c[1, 1] == 0.0

    def test_row_max_has_zero_cost(self):
        a = connected_random_sym(12, seed=5)
        c = cost_dense(log_weight_transform(a))
        finite = np.where(np.isfinite(c), c, np.inf)
        assert np.allclose(finite.min(axis=1), 0.0, atol=1e-12)
        assert finite.min() >= -1e-12

    def test_min_cost_equals_max_product(self):
        rs = np.random.RandomState(0)
        for trial in range(5):
            dense = rs.uniform(0.1, 5.0, (3, 3))
            dense = dense + dense.T
            rows, cols = np.tril_indices(3)
            a = SparseSymMatrix.from_coo(3, rows, cols, dense[rows, cols])
            c = cost_dense(log_weight_transform(a))
            best_cost, perm = exhaustive_lap(c)
            best_prod = exhaustive_max_product(np.abs(to_dense(a)))
            achieved = np.prod([abs(to_dense(a)[perm[j], j]) for j in range(3)])
            assert abs(achieved - best_prod) <= 1e-12 * best_prod

    def test_all_zero_row_rejected(self):
        a = SparseSymMatrix.from_coo(2, [0, 1], [0, 1], [1.0, 0.0])
        with pytest.raises(StructurallySingularError) as err:
            log_weight_transform(a)
        assert 1 in err.value.rows


class TestSolveLap:
    def test_diagonal_costs_identity(self):
        c = CostMatrix.from_entries(3, [0, 1, 2], [0, 1, 2], [2.0, 3.0, 4.0])
        res = solve_lap(c)
        assert np.array_equal(res.sigma.forward, [0, 1, 2])
        assert res.objective == 9.0

    def test_two_by_two_choices(self):
        res = solve_lap(CostMatrix.from_dense(np.array([[0.0, 10.0], [10.0, 0.0]])))
        assert np.array_equal(res.sigma.forward, [0, 1])
        res = solve_lap(CostMatrix.from_dense(np.array([[10.0, 0.0], [0.0, 10.0]])))
        assert np.array_equal(res.sigma.forward, [1, 0])

    def test_matches_exhaustive_on_sparse_costs(self):
        rs = np.random.RandomState(7)
        for trial in range(30):
            n = rs.randint(2, 9)
            dense = np.full((n, n), np.inf)
            dense[np.arange(n), rs.permutation(n)] = rs.uniform(0, 4, n)
            extra = rs.rand(n, n) < 0.4
            dense[extra] = rs.uniform(0, 4, extra.sum())
            ref_cost, _ = exhaustive_lap(dense)
            res = solve_lap(CostMatrix.from_dense(dense))
            assert abs(res.objective - ref_cost) <= 1e-10

    def test_duals_feasible_and_tight(self):
        rs = np.random.RandomState(3)
        dense = rs.uniform(0.0, 5.0, (8, 8))
        res = solve_lap(CostMatrix.from_dense(dense))
        for i in range(8):
            for j in range(8):
                assert res.u[i] + res.v[j] <= dense[i, j] + 1e-8
        for j in range(8):
            i = res.sigma.forward[j]
            assert abs(res.u[i] + res.v[j] - dense[i, j]) <= 1e-8

    def test_structural_singularity_reported(self):
        # rows 0 and 1 both reach only column 0
        c = CostMatrix.from_entries(2, [0, 1], [0, 0], [1.0, 1.0])
        with pytest.raises(StructurallySingularError) as err:
            solve_lap(c)
        assert set(err.value.rows) == {0, 1}

    def test_negative_costs_supported(self):
        dense = np.array([[-5.0, 1.0], [1.0, -5.0]])
        res = solve_lap(CostMatrix.from_dense(dense))
        assert res.objective == -10.0


class TestScalingFromDuals:
    def test_identity_gives_ones(self):
        a = SparseSymMatrix.identity(4)
        res = solve_lap(log_weight_transform(a))
        d = scaling_from_duals(res, a)
        assert np.allclose(d.d, 1.0, atol=1e-12)

    def test_diagonal_forced_to_one(self):
        a = SparseSymMatrix.diagonal([4.0, 9.0])
        res = solve_lap(log_weight_transform(a))
        d = scaling_from_duals(res, a)
        assert np.allclose(d.d, [0.5, 1.0 / 3.0], atol=1e-12)

    def test_overflow_falls_back_to_max_scaling(self):
        # synthetic duals beyond the exp() range must flip the fallback flag
        a = SparseSymMatrix.identity(3)
        res = ae.AssignmentResult(sigma=Permutation.identity(3),
                                  u=np.array([2000.0, 0.0, 0.0]),
                                  v=np.zeros(3), objective=0.0)
        d = scaling_from_duals(res, a)
        assert d.fallback
        assert np.array_equal(d.d, np.ones(3))

    def test_scaled_bounds_random(self):
        for seed in (0, 1, 2, 3):
            a = connected_random_sym(10 + 30 * seed, seed=seed)
            result = symmetric_matching(a)
            scaled = scale_sym(a, result.scaling)
            assert np.abs(scaled.values).max() <= 1.0 + 1e-8
            for blk in result.blocks:
                if blk.is_pair:
                    i, j = blk.members
                    dense = to_dense(scaled)
                    assert abs(abs(dense[i, j]) - 1.0) <= 1e-8


class TestCycles:
    def test_identity_cycles(self):
        p = Permutation.identity(4)
        assert cycles_of_permutation(p) == [(0,), (1,), (2,), (3,)]

    def test_documented_example(self):
        # row->matched-column map of the 6x6 illustration: matched pairs
        # (4,1),(1,2),(5,3),(2,4),(3,5),(6,6) in 1-based (row, col) form
        p = Permutation.from_forward([1, 3, 4, 0, 2, 5])
        cycles = cycles_of_permutation(p)
        assert cycles == [(0, 1, 3), (2, 4), (5,)]

    def test_cycles_reconstruct_permutation(self):
        rs = np.random.RandomState(5)
        for _ in range(10):
            n = rs.randint(1, 12)
            fwd = rs.permutation(n)
            p = Permutation.from_forward(fwd)
            rebuilt = np.empty(n, dtype=int)
            for cyc in cycles_of_permutation(p):
                for t, i in enumerate(cyc):
                    rebuilt[i] = cyc[(t + 1) % len(cyc)]
            assert np.array_equal(rebuilt, fwd)


class TestSplitCycles:
    def test_odd_cycle_singleton_choice(self, figure_pattern):
        result = symmetric_matching(figure_pattern)
        members = [b.members for b in result.blocks]
        assert (0,) in members and (1, 3) in members
        assert (2, 4) in members and (5,) in members

    def test_two_cycle_unchanged(self):
        a = SparseSymMatrix.from_coo(2, [1, 0, 1], [0, 0, 1], [1.0, 0.0, 0.0])
        blocks = split_cycles([(0, 1)], a)
        assert blocks == [Block((0, 1))]

    def test_even_cycle_pairing_metric(self):
        # cycle (0 1 2 3); pairing A = {(0,1),(2,3)}, pairing B = {(1,2),(3,0)};
        # weights make B's weakest pair stronger, so B must win
        entries = {(1, 0): 0.3, (2, 1): 0.9, (3, 2): 0.3, (3, 0): 0.8}
        rows = [r for r, c in entries]
        cols = [c for r, c in entries]
        a = SparseSymMatrix.from_coo(4, rows, cols, list(entries.values()))
        blocks = split_cycles([(0, 1, 2, 3)], a)
        assert Block((1, 2)) in blocks and Block((0, 3)) in blocks
        # pairing A: min(0.3, 0.3) = 0.3; pairing B: min(0.9, 0.8) = 0.8
        entries2 = {(1, 0): 0.9, (2, 1): 0.3, (3, 2): 0.8, (3, 0): 0.3}
        rows2 = [r for r, c in entries2]
        cols2 = [c for r, c in entries2]
        a2 = SparseSymMatrix.from_coo(4, rows2, cols2, list(entries2.values()))
        blocks2 = split_cycles([(0, 1, 2, 3)], a2)
        assert Block((0, 1)) in blocks2 and Block((2, 3)) in blocks2

    def test_tie_breaks_toward_first_pairing(self):
        entries = {(1, 0): 0.5, (2, 1): 0.5, (3, 2): 0.5, (3, 0): 0.5}
        rows = [r for r, c in entries]
        cols = [c for r, c in entries]
        a = SparseSymMatrix.from_coo(4, rows, cols, list(entries.values()))
        blocks = split_cycles([(0, 1, 2, 3)], a)
        assert Block((0, 1)) in blocks and Block((2, 3)) in blocks


class TestBuildSymmetricPermutation:
    def test_figure_blocks_order(self):
        blocks = [Block((0,)), Block((1, 3)), Block((2, 4)), Block((5,))]
        p = build_symmetric_permutation(blocks, 6)
        assert list(p.inverse) == [0, 1, 3, 2, 4, 5]

    def test_singletons_identity(self):
        blocks = [Block((i,)) for i in range(5)]
        p = build_symmetric_permutation(blocks, 5)
        assert np.array_equal(p.forward, np.arange(5))

    def test_matched_entries_adjacent_after_permute(self):
        for seed in (0, 4):
            a = connected_random_sym(14, seed=seed)
            result = symmetric_matching(a)
            scaled = scale_sym(a, result.scaling)
            permuted = ae.permute_sym(scaled, result.p_s)
            dense = to_dense(permuted)
            pos = 0
            for blk in sorted(result.blocks, key=lambda b: b.members[0]):
                if blk.is_pair:
                    assert abs(abs(dense[pos + 1, pos]) - 1.0) <= 1e-8
                    pos += 2
                else:
                    pos += 1

    def test_non_partition_rejected(self):
        with pytest.raises(ValueError):
            build_symmetric_permutation([Block((0,)), Block((0, 1))], 2)


class TestCompressExpand:
    def test_singleton_blocks_isomorphic(self):
        a = connected_random_sym(10, seed=1)
        blocks = [Block((i,)) for i in range(10)]
        g, vmap = compress_graph(a, blocks)
        assert g.n_vertices == 10
        assert np.array_equal(vmap, np.arange(10))
        raw = ae.AdjGraph.from_matrix(a)
        for v in range(10):
            got = set(g.adjacency(v).tolist())
            want = set(raw.adjacency(v).tolist())
            assert got == want

    def test_path_graph_compression(self):
        a = SparseSymMatrix.from_coo(3, [0, 1, 2, 1, 2], [0, 1, 2, 0, 1],
                                     [0.0, 0.0, 0.0, 1.0, 1.0])
        g, vmap = compress_graph(a, [Block((0, 1)), Block((2,))])
        assert g.n_vertices == 2
        assert np.array_equal(g.adjacency(0), [1])
        assert np.array_equal(g.adjacency(1), [0])

    def test_expand_identity(self):
        blocks = [Block((i,)) for i in range(4)]
        p = expand_ordering(Permutation.identity(4), blocks)
        assert np.array_equal(p.forward, np.arange(4))

    def test_expand_swapped_supervertices(self):
        blocks = [Block((0, 1)), Block((2, 3))]
        p = expand_ordering(Permutation.from_forward([1, 0]), blocks)
        assert list(p.inverse) == [2, 3, 0, 1]

    def test_expanded_blocks_contiguous(self):
        a = connected_random_sym(12, seed=2)
        result = symmetric_matching(a)
        g, _ = compress_graph(a, result.blocks)
        order = ae.min_degree_order(g)
        p = expand_ordering(order, result.blocks)
        positions = {m: p.forward[m] for blk in result.blocks for m in blk.members}
        for blk in result.blocks:
            if blk.is_pair:
                i, j = blk.members
                assert abs(int(positions[i]) - int(positions[j])) == 1


class TestFigurePipeline:
    def test_reproduces_documented_cycles_and_blocks(self, figure_pattern):
        res = solve_lap(log_weight_transform(figure_pattern))
        row_to_col = Permutation.from_forward(res.sigma.inverse)
        cycles = cycles_of_permutation(row_to_col)
        assert cycles == [(0, 1, 3), (2, 4), (5,)]
        result = symmetric_matching(figure_pattern)
        assert [b.members for b in result.blocks] == [(0,), (1, 3), (2, 4), (5,)]
        assert list(result.p_s.inverse) == [0, 1, 3, 2, 4, 5]
