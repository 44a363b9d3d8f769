import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import multigraphs
from oracles import all_sides, crossing
from thintree.cp import CpInstance, solve_cp
from thintree.duals import (
    DualWitness,
    cut_edge_weights,
    dyadic_witness,
    edge_embedding,
    eval_dual_average,
    eval_dual_max,
    eval_dual_tree,
    node_edge_weights,
    projections,
    single_pair_shortcut,
    witness_from_weights,
)
from thintree.errors import BadDistribution, BadWitness, Disconnected, InvalidParameter, ZeroDenominator
from thintree.generators import cycle, dumbbell, dyadic, dyadic_long_edge, hypercube, path
from thintree.graph import MultiGraph
from thintree.lch import HierarchyIndex, chain_hierarchy
from thintree.spectral import cut_dominance, effective_resistance, write_matrix


class TestDyadicWitness:
    @pytest.mark.parametrize("h", range(1, 6))
    @pytest.mark.parametrize("k", range(2, 9))
    def test_average_ratio(self, h, k):
        value = eval_dual_average(dyadic(h, k), dyadic_witness(h, k))
        target = h * h / (8 * (h + k) ** 2)
        assert value >= target * (1 - 1e-12)
        assert value == pytest.approx(target, rel=1e-12)

    def test_example_value(self):
        assert eval_dual_average(dyadic(3, 4), dyadic_witness(3, 4)) == pytest.approx(float(Fraction(9, 392)), rel=1e-12)

    def test_denominator(self):
        g, w = dyadic(3, 4), dyadic_witness(3, 4)
        assert (edge_embedding(g, w) ** 2).sum() == pytest.approx(56)

    @pytest.mark.parametrize("h", [3, 4])
    def test_projections_per_level(self, h):
        g, w = dyadic(h, 2), dyadic_witness(h, 2)
        a = projections(g, w)
        for i in range(h):
            for j in range(0, 2 ** (h - i), 2):
                assert a[dyadic_long_edge(h, 2, i, j)] == pytest.approx(2 ** ((i - 1) / 2), rel=1e-12)
        assert a[dyadic_long_edge(h, 2, 2, 0)] == pytest.approx(np.sqrt(2))

    @pytest.mark.parametrize("h", range(1, 7))
    def test_orthonormal(self, h):
        U = dyadic_witness(h, 1).U
        assert np.abs(U @ U.T - np.eye(U.shape[0])).max() <= 1e-12

    def test_uniform_threshold_cuts(self):
        w = dyadic_witness(2, 3)
        assert [s for s, _ in w.lambda_cuts] == [(1, 2, 3, 4), (2, 3, 4), (3, 4), (4,)]
        assert all(x == 0.25 for _, x in w.lambda_cuts)

    def test_bad_parameters(self):
        with pytest.raises(InvalidParameter):
            dyadic_witness(0, 3)


class TestEvaluators:
    def test_zero_denominator(self):
        g = cycle(4)
        w = DualWitness(np.ones((1, 4), dtype=int), np.zeros((0, 1)), ())
        with pytest.raises(ZeroDenominator):
            eval_dual_max(g, w)
        with pytest.raises(ZeroDenominator):
            eval_dual_tree(g, chain_hierarchy(range(4)), [1], w)

    def test_average_single_cut_path(self):
        w = DualWitness([[0, 1, 1]], [[1.0]], (0,), lambda_cuts=[((1, 2), 1.0)])
        assert eval_dual_average(path(3), w) == pytest.approx(1.0)

    def test_average_single_cut_triangle(self):
        # X x_e = (-1, 1, 0), denominator 2; the cut {1} splits its weight over edges 0 and 1
        w = DualWitness([[0, 1, 0]], [[1.0]], (0,), lambda_cuts=[((1,), 1.0)])
        assert eval_dual_average(cycle(3), w) == pytest.approx(0.25)

    def test_max_hand_value(self):
        w = DualWitness([[0, 1, 0]], [[1.0]], (1,))
        assert eval_dual_max(cycle(3), w) == pytest.approx(0.5)

    def test_bad_distribution(self):
        g = cycle(3)
        with pytest.raises(BadDistribution):
            eval_dual_average(g, DualWitness([[0, 1, 0]], [[1.0]], (0,), lambda_cuts=[((1,), 0.5)]))
        with pytest.raises(BadDistribution):
            eval_dual_average(g, DualWitness([[0, 1, 0]], [[1.0]], (0,), lambda_cuts=[((1,), 1.5), ((2,), -0.5)]))
        with pytest.raises(BadDistribution):
            eval_dual_average(g, DualWitness([[0, 1, 0]], [[1.0]], (0,)))

    def test_gamma_on_cycle(self):
        gamma = cut_edge_weights(cycle(4), [((1,), 0.5), ((1, 2), 0.5)])
        assert np.allclose(gamma, [0.25 + 0.25, 0.25, 0.25, 0])

    def test_tree_ratio_by_hand(self):
        g = dyadic(2, 2)
        H = chain_hierarchy(range(g.n))
        w = dyadic_witness(2, 2)
        a = projections(g, w)
        den = (edge_embedding(g, w) ** 2).sum()
        index = HierarchyIndex(g, H)
        expect = sum(a[index.outgoing(t)].sum() ** 2 / index.outgoing(t).size for t in range(1, 5)) / den
        assert eval_dual_tree(g, H, range(1, 5), w).ratio == pytest.approx(expect)

    @pytest.mark.parametrize("seed", range(10))
    def test_nuclear_form_matches_u_form(self, seed):
        rng = np.random.default_rng(seed)
        g = dyadic(3, 2)
        H = chain_hierarchy(range(g.n))
        lam = rng.dirichlet(np.ones(8))
        nodes = {t: float(x) for t, x in zip(range(1, 9), lam)}
        X = rng.integers(0, 2, size=(5, g.n))
        X[0, 0], X[0, 1] = 0, 1
        w = witness_from_weights(g, X, node_edge_weights(g, H, nodes))
        w = DualWitness(w.X, w.U, w.u_edges, None, nodes)
        out = eval_dual_tree(g, H, range(1, 9), w)
        assert out.weighted == pytest.approx(out.nuclear, abs=1e-8)


class TestSandwich:
    def test_tree(self):
        g = dyadic(3, 4)
        H = chain_hierarchy(range(g.n))
        tset = list(range(1, 9))
        eps = solve_cp(CpInstance(g, "tree", hierarchy=H, nodes=tset)).objective
        rng = np.random.default_rng(7)
        for _ in range(40):
            nodes = {t: float(x) for t, x in zip(tset, rng.dirichlet(np.ones(8)))}
            X = rng.integers(0, 2, size=(int(rng.integers(1, 10)), g.n))
            X[0, :2] = (0, 1)
            w = witness_from_weights(g, X, node_edge_weights(g, H, nodes))
            w = DualWitness(w.X, w.U, w.u_edges, None, nodes)
            out = eval_dual_tree(g, H, tset, w)
            assert out.weighted <= 2 * eps + 1e-9
            assert out.ratio <= 2 * eps + 1e-9
        assert eval_dual_tree(g, H, tset, dyadic_witness(3, 4)).ratio <= 2 * eps + 1e-9

    def test_average(self):
        g = dyadic(2, 3)
        eps = solve_cp(CpInstance(g, "average")).objective
        sides = [tuple(sorted(S)) for S in all_sides(g.n)]
        rng = np.random.default_rng(8)
        for _ in range(40):
            cuts = tuple(zip(sides, rng.dirichlet(np.ones(len(sides))).tolist()))
            X = rng.integers(0, 2, size=(int(rng.integers(1, 8)), g.n))
            X[0, :2] = (0, 1)
            w = witness_from_weights(g, X, np.sqrt(cut_edge_weights(g, cuts)))
            w = DualWitness(w.X, w.U, w.u_edges, None, None, cuts)
            assert eval_dual_average(g, w) <= 2 * eps + 1e-9
        assert eval_dual_average(g, dyadic_witness(2, 3)) <= 2 * eps + 1e-9


class TestWitnessModel:
    def test_rejects_non_binary(self):
        with pytest.raises(BadWitness):
            DualWitness([[0, 2]], np.zeros((0, 1)), ())

    def test_rejects_non_orthogonal(self):
        with pytest.raises(BadWitness):
            DualWitness([[0, 1], [1, 0]], [[1.0, 0.0], [1.0, 0.0]], (0, 1))

    def test_rejects_shape(self):
        with pytest.raises(BadWitness):
            DualWitness([[0, 1]], [[1.0, 0.0]], (0,))
        with pytest.raises(BadWitness):
            eval_dual_max(cycle(4), DualWitness([[0, 1, 1]], [[1.0]], (0,)))
        with pytest.raises(BadWitness):
            DualWitness([[0, 1]], [[1.0]], (0,), row_weights=[-1.0])

    def test_unknown_edge(self):
        with pytest.raises(BadWitness):
            eval_dual_max(path(3), DualWitness([[0, 1, 1]], [[1.0]], (5,)))

    def test_json_round_trip(self):
        w = dyadic_witness(2, 3)
        back = DualWitness.from_json(json.loads(json.dumps(w.to_json())))
        assert np.array_equal(back.X, w.X) and back.u_edges == tuple(sorted(w.u_edges))
        assert eval_dual_average(dyadic(2, 3), back) == pytest.approx(eval_dual_average(dyadic(2, 3), w))

    def test_json_matrix_reference(self, tmp_path):
        write_matrix(np.array([[0, 1, 1]]), tmp_path / "x.txt")
        data = {"X": "x.txt", "rowWeights": [4.0], "U": {"0": [1.0]}, "lambdaNodes": {"1": 1.0}}
        w = DualWitness.from_json(data, tmp_path)
        assert w.lambda_nodes == {1: 1.0}
        assert eval_dual_max(path(3), w) == pytest.approx(1.0)
        assert np.allclose(w.scaled, [[0, 2, 2]])


class TestPairShortcut:
    def test_triangle(self):
        g = cycle(3)
        D, k = single_pair_shortcut(g, 0, 2)
        assert k == 2
        assert effective_resistance(D.matrix, (0, 2)) == pytest.approx(0.5)
        values = sorted(float(np.outer(s, s).ravel() @ D.matrix.ravel()) for s in ([1, 0, 0], [0, 1, 0], [0, 0, 1]))
        assert values == pytest.approx([0, 2, 2])
        assert cut_dominance(D.matrix, g.laplacian).holds

    def test_dumbbell(self):
        g = dumbbell(5)
        D, k = single_pair_shortcut(g, 0, 1)
        assert k == 5 and np.allclose(D.matrix, g.laplacian)

    def test_errors(self):
        with pytest.raises(Disconnected):
            single_pair_shortcut(MultiGraph(4, ((0, 1), (2, 3))), 0, 3)
        with pytest.raises(InvalidParameter):
            single_pair_shortcut(cycle(3), 1, 1)

    @given(multigraphs(min_n=3, max_n=8), st.data())
    def test_resistance_and_dominance(self, g, data):
        a, b = data.draw(st.lists(st.integers(0, g.n - 1), min_size=2, max_size=2, unique=True))
        D, k = single_pair_shortcut(g, a, b)
        sides = [S for S in all_sides(g.n) if (a in S) != (b in S)]
        assert k == min(crossing(g.edges, S) for S in sides)
        assert effective_resistance(D.matrix, (a, b)) == pytest.approx(1 / k)
        assert cut_dominance(D.matrix, g.laplacian).holds

    def test_cube_pair(self):
        D, k = single_pair_shortcut(hypercube(3), 0, 7)
        assert k == 3
