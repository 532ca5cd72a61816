import math
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftdo.errors import (
    DegenerateCutError,
    DuplicateEdgeError,
    EmptyGraphError,
    MalformedLineError,
    OutOfRangeError,
    SelfLoopError,
)
from ftdo.graph import (
    UNREACHABLE,
    Graph,
    bfs_distances,
    brute_force_expansion,
    conductance,
    edge_from_id,
    edge_id,
    format_edge_list,
    graph_diameter,
    induced_subgraph,
    parse_edge_list,
)


def complete(n):
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def path(n):
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def small_graphs(max_n=8):
    return st.integers(2, max_n).flatmap(
        lambda n: st.builds(
            lambda eids: Graph.from_edge_ids(n, eids),
            st.sets(st.integers(0, n * (n - 1) // 2 - 1), max_size=n * (n - 1) // 2),
        )
    )


class TestEdgeId:
    def test_first_pair(self):
        assert edge_id(0, 1, 4) == 0

    def test_lexicographic_order(self):
        # derived: enumerate all 6 pairs of K4 in lexicographic order
        pairs = list(combinations(range(4), 2))
        for idx, (u, v) in enumerate(pairs):
            assert edge_id(u, v, 4) == idx
        assert edge_id(2, 3, 4) == 5

    def test_self_loop_rejected(self):
        with pytest.raises(SelfLoopError):
            edge_id(2, 2, 4)

    def test_out_of_range(self):
        with pytest.raises(OutOfRangeError):
            edge_id(0, 4, 4)

    def test_symmetric(self):
        assert edge_id(3, 1, 6) == edge_id(1, 3, 6)

    @pytest.mark.parametrize("n", [2, 3, 5, 17, 64])
    def test_roundtrip_exhaustive(self, n):
        seen = set()
        for u in range(n):
            for v in range(u + 1, n):
                eid = edge_id(u, v, n)
                assert edge_from_id(eid, n) == (u, v)
                seen.add(eid)
        assert seen == set(range(n * (n - 1) // 2))


class TestParse:
    def test_path(self):
        g = parse_edge_list("3 2\n0 1\n1 2")
        assert g == path(3)

    def test_empty(self):
        g = parse_edge_list("2 0")
        assert g.n == 2 and g.m == 0

    def test_duplicate(self):
        with pytest.raises(DuplicateEdgeError):
            parse_edge_list("3 2\n0 1\n0 1")

    def test_self_loop(self):
        with pytest.raises(SelfLoopError):
            parse_edge_list("3 1\n1 1")

    def test_malformed(self):
        with pytest.raises(MalformedLineError):
            parse_edge_list("3 1\n0 x")
        with pytest.raises(MalformedLineError):
            parse_edge_list("3 2\n0 1")

    def test_comments_and_weights(self):
        g = parse_edge_list("# header comment\n2 1\n0 1 8\n")
        assert g.weights == {0: 8}

    def test_format_roundtrip(self):
        g = complete(5)
        assert parse_edge_list(format_edge_list(g)) == g


class TestBfs:
    def test_path(self):
        assert bfs_distances(path(3), 0) == [0, 1, 2]

    def test_complete(self):
        for s in range(4):
            d = bfs_distances(complete(4), s)
            assert d[s] == 0 and all(d[v] == 1 for v in range(4) if v != s)

    def test_disconnected(self):
        assert bfs_distances(Graph(2), 0) == [0, UNREACHABLE]

    def test_source_range(self):
        with pytest.raises(OutOfRangeError):
            bfs_distances(path(3), 3)

    @given(small_graphs())
    @settings(max_examples=40, deadline=None)
    def test_triangle_inequality(self, g):
        dist = [bfs_distances(g, s) for s in range(g.n)]
        for u in range(g.n):
            assert dist[u][u] == 0
            for v in range(g.n):
                assert dist[u][v] == dist[v][u]
                for w in g.adjacency[v]:
                    assert dist[u][w] <= dist[u][v] + 1


class TestUnreachable:
    def test_ordering(self):
        assert UNREACHABLE > 10**18
        assert not (UNREACHABLE < 5)
        assert UNREACHABLE >= UNREACHABLE

    def test_scaling_is_absorbing(self):
        assert 7 * UNREACHABLE is UNREACHABLE
        assert UNREACHABLE * 1000 is UNREACHABLE


class TestInduced:
    def test_k4_to_k3(self):
        sub = induced_subgraph(complete(4), {0, 1, 2})
        assert sub.m == 3 and sub.n == 3
        assert sub.effective_labels() == (0, 1, 2)

    def test_single_vertex(self):
        assert induced_subgraph(complete(4), {2}).m == 0

    def test_p3_endpoints(self):
        # derived: no edge joins 0 and 2 in P3
        sub = induced_subgraph(path(3), {0, 2})
        assert sub.n == 2 and sub.m == 0

    def test_identity(self):
        g = complete(5)
        assert induced_subgraph(g, range(5)) == g

    @given(small_graphs(), st.data())
    @settings(max_examples=30, deadline=None)
    def test_monotone(self, g, data):
        vs2 = data.draw(st.sets(st.integers(0, g.n - 1)))
        vs1 = data.draw(st.sets(st.sampled_from(sorted(vs2)))) if vs2 else set()
        e1 = {
            tuple(sorted((induced_subgraph(g, vs1).effective_labels()[a],
                          induced_subgraph(g, vs1).effective_labels()[b])))
            for a, b in induced_subgraph(g, vs1).edge_pairs()
        }
        e2 = {
            tuple(sorted((induced_subgraph(g, vs2).effective_labels()[a],
                          induced_subgraph(g, vs2).effective_labels()[b])))
            for a, b in induced_subgraph(g, vs2).edge_pairs()
        }
        assert e1 <= e2


def conductance_by_edge_enumeration(g, s):
    """Independent implementation: walk the edge list, sum degrees directly."""
    s = set(s)
    delta = sum(1 for u, v in g.edge_pairs() if (u in s) != (v in s))
    vol_s = sum(1 for u, v in g.edge_pairs() for x in (u, v) if x in s)
    vol_rest = 2 * g.m - vol_s
    small = min(vol_s, vol_rest)
    return Fraction(delta, small) if small else Fraction(0)


class TestConductance:
    def test_k4_singleton(self):
        # derived by hand: delta = 3, Vol(S) = 3, Vol(rest) = 9
        assert conductance(complete(4), {0}) == Fraction(1)

    def test_p3_middle(self):
        # derived by hand: delta = 2, Vol(S) = 2
        assert conductance(path(3), {1}) == Fraction(1)

    def test_degenerate(self):
        with pytest.raises(DegenerateCutError):
            conductance(complete(4), range(4))
        with pytest.raises(DegenerateCutError):
            conductance(complete(4), [])

    def test_empty_graph(self):
        with pytest.raises(EmptyGraphError):
            conductance(Graph(3), {0})

    def test_lopsided_reporting(self):
        val = conductance(complete(4), {0}, lopsided=True)
        assert isinstance(val, float) and val > 0

    @given(small_graphs(6))
    @settings(max_examples=25, deadline=None)
    def test_matches_edge_enumeration_exhaustively(self, g):
        if g.m == 0:
            return
        for bits in range(1, (1 << g.n) - 1):
            s = {v for v in range(g.n) if bits >> v & 1}
            assert conductance(g, s) == conductance_by_edge_enumeration(g, s)


class TestBruteForceExpansion:
    def test_k4(self):
        phi, _ = brute_force_expansion(complete(4))
        assert phi == Fraction(2, 3)

    def test_disconnected(self):
        g = Graph(4, [(0, 1), (2, 3)])
        phi, cut = brute_force_expansion(g)
        assert phi == 0
        assert conductance_by_edge_enumeration(g, cut) == 0

    def test_expander_diameter_bound(self):
        # configured tolerance c = 4 against c*loglog(n)/phi
        for g in (complete(4), complete(8), complete(12), path(4)):
            phi, _ = brute_force_expansion(g)
            if phi == 0:
                continue
            bound = 4 * max(1.0, math.log2(max(2.0, math.log2(g.n)))) / float(phi)
            assert graph_diameter(g) <= bound
