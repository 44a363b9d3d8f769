import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import multigraphs
from oracles import brute_min_cut, crossing
from thintree.errors import InconsistentLeafMap, InvalidHierarchy, NoLowDegreeVertex, PreconditionFailed, UnknownNode
from thintree.generators import amplify, complete, cycle, dumbbell, dyadic, hypercube, ladder
from thintree.graph import graph_expansion, induced_subgraph, is_connected, min_edge_connectivity
from thintree.lch import (
    Hierarchy,
    HierarchyIndex,
    chain_hierarchy,
    expander_extract,
    general_lch,
    hierarchy_views,
    planar_lch,
    star_hierarchy,
    validate_lch,
)


def random_hierarchy(rng, n):
    """Merge random groups of two or three active nodes until one remains."""
    parent = [-1] * n
    active = list(range(n))
    while len(active) > 1:
        size = min(len(active), int(rng.integers(2, 4)))
        pick = sorted(rng.choice(len(active), size=size, replace=False).tolist())
        t = len(parent)
        parent.append(-1)
        for i in pick:
            parent[active[i]] = t
        active = [a for i, a in enumerate(active) if i not in pick] + [t]
    return Hierarchy(parent, {i: i for i in range(n)})


class TestHierarchyModel:
    def test_star(self):
        H = star_hierarchy(4)
        assert H.root == 4 and H.children[4] == (0, 1, 2, 3)
        assert H.vertices(4) == (0, 1, 2, 3)

    def test_chain_layout(self):
        H = chain_hierarchy(range(4))
        assert H.parent == (4, 4, 5, 6, 5, 6, -1)
        assert H.marked == frozenset({1, 2, 3})
        assert H.vertices(5) == (0, 1, 2)

    def test_two_roots(self):
        with pytest.raises(InvalidHierarchy):
            Hierarchy([-1, -1], {0: 0, 1: 1})

    def test_cycle_in_parents(self):
        with pytest.raises(InvalidHierarchy):
            Hierarchy([2, 2, 3, 2, -1], {0: 0, 1: 1})

    def test_leaf_map_not_bijective(self):
        with pytest.raises(InconsistentLeafMap):
            Hierarchy([2, 2, -1], {0: 0, 1: 0})
        with pytest.raises(InconsistentLeafMap):
            Hierarchy([2, 2, -1], {0: 0, 2: 1})

    def test_unknown_node(self):
        with pytest.raises(UnknownNode):
            star_hierarchy(3).vertices(9)
        with pytest.raises(UnknownNode):
            validate_lch(cycle(3), star_hierarchy(3), 1, 0, [7])

    def test_json_round_trip(self):
        H = planar_lch(dyadic(2, 3))
        assert Hierarchy.from_json(H.to_json()) == H

    def test_json_node_count_checked(self):
        data = star_hierarchy(3).to_json()
        data["nodes"] = 5
        with pytest.raises(InvalidHierarchy):
            Hierarchy.from_json(data)

    @given(st.integers(2, 12), st.integers(0, 2**32 - 1))
    def test_siblings_are_disjoint(self, n, seed):
        H = random_hierarchy(np.random.default_rng(seed), n)
        assert H.vertices(H.root) == tuple(range(n))
        for t in H.internal_nodes:
            kids = H.children[t]
            assert len(kids) >= 2
            sets = [set(H.vertices(c)) for c in kids]
            assert sum(map(len, sets)) == len(set().union(*sets)) == len(H.vertices(t))


class TestViews:
    @pytest.mark.parametrize("h,k", [(2, 3), (3, 4)])
    def test_chain_on_dyadic(self, h, k):
        g = dyadic(h, k)
        H = chain_hierarchy(range(g.n))
        index = HierarchyIndex(g, H)
        for i in range(1, g.n):
            expect = [e for e, (u, v) in enumerate(g.edges) if i in (u, v) and min(u, v) < i and max(u, v) == i]
            assert index.outgoing(i).tolist() == expect
            if i >= 2:
                t_prev = g.n + i - 2
                assert index.outgoing(t_prev).tolist() == expect

    def test_root(self):
        g = hypercube(3)
        view = hierarchy_views(g, star_hierarchy(8), 8)
        assert view.is_root and view.outgoing == () and view.leaving == ()

    def test_star_internal_is_graph(self):
        g = dyadic(2, 2)
        sub, ids = HierarchyIndex(g, star_hierarchy(g.n)).internal(g.n)
        assert sub == g and ids == tuple(range(g.m))

    def test_leaf_has_no_internal(self):
        assert HierarchyIndex(cycle(3), star_hierarchy(3)).internal(0) == (None, ())

    def test_size_mismatch(self):
        with pytest.raises(InconsistentLeafMap):
            HierarchyIndex(cycle(4), star_hierarchy(3))

    @given(multigraphs(max_n=9), st.integers(0, 2**32 - 1))
    def test_views_match_definitions(self, g, seed):
        H = random_hierarchy(np.random.default_rng(seed), g.n)
        index = HierarchyIndex(g, H)
        for t in range(H.n_nodes):
            V = set(H.vertices(t))
            leaving = [e for e, (u, v) in enumerate(g.edges) if (u in V) != (v in V)]
            assert index.leaving(t).tolist() == leaving
            if t == H.root:
                assert index.outgoing(t).size == 0
                continue
            P = set(H.vertices(H.parent[t]))
            out = [e for e in leaving if set(g.edges[e]) <= P]
            assert index.outgoing(t).tolist() == out
            if H.children[t]:
                sub, ids = index.internal(t)
                assert sub.n == len(H.children[t])
                assert sub.m == len(ids)
                inside = [e for e, (u, v) in enumerate(g.edges) if u in V and v in V]
                within_child = sum(
                    1 for e in inside if any(set(g.edges[e]) <= set(H.vertices(c)) for c in H.children[t])
                )
                assert len(ids) == len(inside) - within_child


class TestValidate:
    @pytest.mark.parametrize("h,k", [(2, 3), (3, 4), (3, 8)])
    def test_chain_on_dyadic_is_valid(self, h, k):
        g = dyadic(h, k)
        H = chain_hierarchy(range(g.n))
        report = validate_lch(g, H, k, 0.5, range(1, 2**h + 1))
        assert report.ok, report.violations

    def test_chain_fails_stronger_ratio(self):
        g = dyadic(3, 4)
        report = validate_lch(g, chain_hierarchy(range(g.n)), 4, 0.9, range(1, 9))
        assert not report.ok
        assert {c for _, c, _ in report.violations} == {"ratio"}

    def test_star_on_connected_graph(self):
        g = hypercube(3)
        assert validate_lch(g, star_hierarchy(8), 3, 0.7, ()).ok

    def test_star_connectivity_violation(self):
        report = validate_lch(hypercube(3), star_hierarchy(8), 4, 0, ())
        assert (8, "connectivity", 3) in report.violations

    def test_single_child_node(self):
        H = Hierarchy([3, 3, 4, 5, 5, -1], {0: 0, 1: 1, 2: 2})
        report = validate_lch(cycle(3, mult=2), H, 1, 0, ())
        assert (4, "children", 1) in report.violations
        assert report.to_json()["valid"] is False

    def test_report_json(self):
        g = dyadic(2, 2)
        out = validate_lch(g, chain_hierarchy(range(g.n)), 2, 0.5, [1, 2]).to_json()
        assert out["valid"] and out["lambda"] == 0.5 and out["tset"] == [1, 2]
        assert set(out["measurements"]) == {str(t) for t in range(2 * g.n - 1)}


class TestPlanar:
    def test_dumbbell(self):
        H = planar_lch(dumbbell(3))
        assert H.n_nodes == 3 and H.marked == frozenset({0})

    def test_triangle(self):
        g = cycle(3, mult=6)
        H = planar_lch(g)
        assert H.n_nodes == 5
        assert validate_lch(g, H, 12 / 5, 1 / 5, H.marked).ok

    @pytest.mark.parametrize("c", [3, 10])
    def test_amplified_ladder(self, c):
        g = amplify(ladder(8, 4).graph, c)
        k = min_edge_connectivity(g)[0]
        H = planar_lch(g)
        assert validate_lch(g, H, k / 5, 1 / 5, H.marked).ok

    def test_unamplified_ladder(self):
        g = ladder(8, 4).graph
        H = planar_lch(g)
        assert validate_lch(g, H, 0, 1 / 5, H.marked).ok

    def test_dense_graph_has_no_low_degree_vertex(self):
        with pytest.raises(NoLowDegreeVertex):
            planar_lch(complete(7))

    @given(multigraphs(max_n=10))
    def test_binary_with_n_minus_one_merges(self, g):
        try:
            H = planar_lch(g)
        except NoLowDegreeVertex:
            return
        assert H.n_nodes == 2 * g.n - 1
        assert all(len(H.children[t]) == 2 for t in H.internal_nodes)
        assert len(H.marked) == g.n - 1


class TestExpanderExtraction:
    def test_dumbbell(self):
        assert expander_extract(dumbbell(7), 7) == (0, 1)

    def test_amplified_hypercube(self):
        g = amplify(hypercube(4), 14)
        S = expander_extract(g, 56)
        sub = induced_subgraph(g, S).graph
        assert min_edge_connectivity(sub)[0] >= 56 // 20
        assert 2 * sub.m >= g.degrees[list(S)].sum() / 4
        assert graph_expansion(sub).phi >= 1 / 56**2

    def test_precondition(self):
        with pytest.raises(PreconditionFailed):
            expander_extract(hypercube(4), 4)
        with pytest.raises(PreconditionFailed):
            general_lch(hypercube(4), 4)

    def test_declared_k_above_connectivity(self):
        with pytest.raises(PreconditionFailed):
            expander_extract(amplify(hypercube(4), 7), 56)


class TestGeneral:
    def test_dumbbell(self):
        assert general_lch(dumbbell(7), 7).n_nodes == 3

    def test_amplified_hypercube(self):
        g = amplify(hypercube(4), 14)
        H = general_lch(g, 56)
        assert validate_lch(g, H, 56 // 20, 1 / 4, range(H.n_nodes)).ok
        index = HierarchyIndex(g, H)
        for t in H.internal_nodes:
            sub, _ = index.internal(t)
            assert graph_expansion(sub).phi >= 1 / 56**2

    def test_amplified_cycle(self):
        g = amplify(cycle(6), 14)
        k = min_edge_connectivity(g)[0]
        H = general_lch(g, k)
        index = HierarchyIndex(g, H)
        report = validate_lch(g, H, k / 20, 1 / 4, range(H.n_nodes))
        assert report.ok
        for t in H.internal_nodes:
            sub, _ = index.internal(t)
            assert is_connected(sub)
            assert graph_expansion(sub).phi >= 1 / k**2

    def test_every_vertex_reaches_root(self):
        g = amplify(hypercube(3), 12)
        H = general_lch(g, 36)
        for v in range(g.n):
            t, chain = H.vertex_leaf[v], []
            while t != -1:
                assert v in H.vertices(t)
                chain.append(t)
                t = H.parent[t]
            assert chain[-1] == H.root


@given(multigraphs(min_n=3, max_n=10, max_mult=4), st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_local_connectivity_composes(g, seed, k):
    rng = np.random.default_rng(seed)
    H = random_hierarchy(rng, g.n)
    F = sorted(rng.choice(g.m, size=int(rng.integers(1, g.m + 1)), replace=False).tolist())
    index = HierarchyIndex(g, H)
    Fset = set(F)
    for t in H.internal_nodes:
        sub, ids = index.internal(t)
        keep = [(u, v) for (u, v), e in zip(sub.edges, ids) if e in Fset]
        if brute_min_cut(sub.n, keep) < k:
            return
    edges = [g.edges[e] for e in F]
    assert brute_min_cut(g.n, edges) >= k
    assert all(crossing(edges, {v}) >= k for v in range(g.n))
