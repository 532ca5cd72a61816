import random
from fractions import Fraction

import pytest

from ftdo.decomposition import (
    CERT_BRUTE_FORCE,
    Decomposition,
    DecompositionConfig,
    certify_expansion,
    decompose,
    peel,
    robustness_report,
)
from ftdo.errors import EmptyGraphError, InfeasibleParamsError, InvalidDeletionError
from ftdo.graph import (
    Graph,
    brute_force_expansion,
    edge_id,
    graph_diameter,
)


def complete(n, offset=0):
    return [(i + offset, j + offset) for i in range(n) for j in range(i + 1, n)]


def two_cliques(size):
    edges = complete(size) + complete(size, offset=size) + [(0, size)]
    return Graph(2 * size, edges)


class TestPeel:
    def test_k5_already_dense(self):
        kept, removed = peel(Graph(5, complete(5)), 4)
        assert kept == frozenset(range(5)) and removed == 0

    def test_star_collapses(self):
        # derived: leaves peel first, then the isolated center
        star = Graph(6, [(0, i) for i in range(1, 6)])
        kept, removed = peel(star, 2)
        assert kept == frozenset() and removed == 5

    def test_path_min_degree_one(self):
        g = Graph(3, [(0, 1), (1, 2)])
        kept, removed = peel(g, 1)
        assert kept == frozenset(range(3)) and removed == 0

    def test_order_independence_matches_core(self):
        rng = random.Random(3)
        for _ in range(20):
            n = rng.randrange(4, 12)
            eids = rng.sample(range(n * (n - 1) // 2), rng.randrange(0, n * (n - 1) // 2))
            g = Graph.from_edge_ids(n, eids)
            d = rng.randrange(1, 4)
            kept, _ = peel(g, d)
            # independent fixpoint computation
            alive = set(range(n))
            changed = True
            while changed:
                changed = False
                for v in sorted(alive, reverse=True):
                    if sum(1 for w in g.adjacency[v] if w in alive) < d:
                        alive.discard(v)
                        changed = True
            assert kept == frozenset(alive)


class TestCertify:
    def test_k4_brute_accepts(self):
        out = certify_expansion(Graph(4, complete(4)), Fraction(1, 2), CERT_BRUTE_FORCE)
        assert out.accepted
        assert out.certificate.phi_exact == brute_force_expansion(Graph(4, complete(4)))[0]

    def test_path_refuted_with_middle_cut(self):
        g = Graph(8, [(i, i + 1) for i in range(7)])
        out = certify_expansion(g, Fraction(1, 2), CERT_BRUTE_FORCE)
        assert out.status == "refuted"
        assert out.cut_phi == Fraction(1, 7)

    def test_empty_graph(self):
        with pytest.raises(EmptyGraphError):
            certify_expansion(Graph(1), Fraction(1, 4))

    def test_spectral_accepts_clique(self):
        out = certify_expansion(Graph(16, complete(16)), Fraction(1, 4))
        assert out.accepted and out.certificate.kind == "spectral"

    def test_spectral_refutes_bridge(self):
        out = certify_expansion(two_cliques(8), Fraction(1, 4))
        assert out.status == "refuted"
        # the sweep must isolate one clique
        assert out.cut in (frozenset(range(8)), frozenset(range(8, 16)))

    def test_brute_size_guard(self):
        with pytest.raises(InfeasibleParamsError):
            certify_expansion(Graph(21, complete(21)), Fraction(1, 4), CERT_BRUTE_FORCE)


def check_partition(g, dec):
    seen = set()
    comp_edges = 0
    for comp in dec.components:
        assert not (comp & seen)
        seen |= comp
        for v in comp:
            for w in g.adjacency[v]:
                if v < w and w in comp:
                    eid = edge_id(v, w, g.n)
                    assert eid not in dec.crossing
                    comp_edges += 1
    assert comp_edges + len(dec.crossing) == g.m


class TestDecompose:
    def test_clique_single_component(self):
        g = Graph(64, complete(64))
        dec = decompose(g, DecompositionConfig(8, Fraction(1, 4)))
        assert dec.components == [frozenset(range(64))]
        assert dec.crossing == frozenset()

    def test_bridge_cut(self):
        g = two_cliques(32)
        dec = decompose(g, DecompositionConfig(8, Fraction(1, 4)))
        assert sorted(len(c) for c in dec.components) == [32, 32]
        assert dec.crossing == frozenset({edge_id(0, 32, 64)})

    def test_edgeless(self):
        dec = decompose(Graph(5), DecompositionConfig(2, Fraction(1, 4)))
        assert dec.components == [] and dec.crossing == frozenset()

    def test_partition_and_degree_properties(self):
        rng = random.Random(9)
        for _ in range(10):
            n = rng.randrange(6, 28)
            m_max = n * (n - 1) // 2
            g = Graph.from_edge_ids(n, rng.sample(range(m_max), rng.randrange(0, m_max)))
            d = rng.randrange(1, 5)
            dec = decompose(g, DecompositionConfig(d, Fraction(1, 8)))
            check_partition(g, dec)
            for comp in dec.components:
                for v in comp:
                    assert sum(1 for w in g.adjacency[v] if w in comp) >= d

    def test_certificates_attached(self):
        dec = decompose(Graph(16, complete(16)), DecompositionConfig(4, Fraction(1, 4)))
        assert len(dec.certificates) == len(dec.components) == 1
        assert dec.certificates[0].phi_bound >= 0.25

    def test_progress_on_dense_input(self):
        # calibrated progress check: dense enough input keeps |X| <= 3m/4
        g = Graph(64, complete(64))
        dec = decompose(g, DecompositionConfig(4, Fraction(1, 4)))
        assert len(dec.crossing) <= 3 * g.m // 4

    def test_serialization_roundtrip(self):
        dec = decompose(two_cliques(16), DecompositionConfig(4, Fraction(1, 4)))
        back = Decomposition.from_bytes(dec.to_bytes())
        assert back.components == dec.components
        assert back.crossing == dec.crossing
        assert "crossing" in dec.dump()

    def test_deterministic(self):
        g = two_cliques(16)
        a = decompose(g, DecompositionConfig(4, Fraction(1, 4)))
        b = decompose(g, DecompositionConfig(4, Fraction(1, 4)))
        assert a.to_bytes() == b.to_bytes()


class TestRobustnessReport:
    def test_no_deletions(self):
        g = Graph(8, complete(8))
        rep = robustness_report(g, frozenset(), 7)
        assert rep.v_bad == frozenset()
        assert rep.good_diameter == graph_diameter(g)

    def test_targeted_vertex_goes_bad(self):
        g = Graph(8, complete(8))  # 7-regular
        f = frozenset(edge_id(0, v, 8) for v in range(1, 8))
        rep = robustness_report(g, f, 7)
        assert 0 in rep.v_bad
        assert len(rep.v_bad) <= 4 * len(f) // 7

    def test_k64_random_deletions(self):
        g = Graph(64, complete(64))
        rng = random.Random(1)
        f = frozenset(rng.sample(sorted(g.edge_ids), 32))
        rep = robustness_report(g, f, 63)
        assert len(rep.v_bad) <= rep.bad_bound == 4 * 32 // 63
        assert rep.max_high_degree_distance <= 2

    def test_invalid_deletion(self):
        g = Graph(4, [(0, 1)])
        with pytest.raises(InvalidDeletionError):
            robustness_report(g, frozenset({3}), 1)


class TestSubsampleExpansion:
    def test_sampled_expander_keeps_expansion(self):
        # uniform edge sample of size ~ m*log^3(n)/D (capped at m) from a
        # certified expander stays an expander at phi/c_sub, c_sub = 4
        import math
        from fractions import Fraction
        from ftdo.graph import Graph

        rng = random.Random(21)
        passes = 0
        trials = 20
        for t in range(trials):
            n = rng.choice([24, 32])
            g = Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
            d = n - 1
            phi = Fraction(1, 4)
            assert certify_expansion(g, phi).accepted
            size = min(g.m, math.ceil(g.m * math.log2(n) ** 3 / d / 16))
            sample = rng.sample(sorted(g.edge_ids), size)
            sub = Graph.from_edge_ids(n, sample)
            kept = frozenset(v for v in range(n) if sub.degrees[v] > 0)
            if len(kept) < n:  # a sampled-out vertex voids the trial cheaply
                continue
            out = certify_expansion(sub, phi / 4)
            passes += out.accepted
            trials = trials
        assert passes >= 18
