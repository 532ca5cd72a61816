"""Seeded graph families and deletion adversaries for the verification harness."""

from __future__ import annotations

import random
from fractions import Fraction

from .decomposition import CERT_SPECTRAL, certify_expansion
from .errors import BudgetExceededError, InfeasibleParamsError
from .graph import Graph, edge_id

FAMILIES = (
    "random-regular",
    "gnp",
    "clique-bridges",
    "bipartite-complete",
    "two-hop-star",
    "expander-certified",
)

ADVERSARIES = ("random", "degree-targeted", "adaptive-greedy", "root-targeted")


def random_regular(n: int, d: int, seed: int, max_tries: int = 50) -> Graph:
    """Configuration model with deterministic edge-swap repair of collisions.

    Pure rejection is hopeless for dense d (expected collisions grow like
    d^2), so self-loops and duplicate pairings are repaired by random
    2-swaps; a full resample only happens if the repair stalls.
    """
    if n * d % 2 or d >= n or d < 1:
        raise InfeasibleParamsError(f"no simple {d}-regular graph on {n} vertices")
    rng = random.Random(seed)
    for _ in range(max_tries):
        stubs = [v for v in range(n) for _ in range(d)]
        rng.shuffle(stubs)
        pairs = [[stubs[2 * i], stubs[2 * i + 1]] for i in range(len(stubs) // 2)]
        if _repair_pairing(pairs, rng):
            edges = [(min(a, b), max(a, b)) for a, b in pairs]
            return Graph(n, edges)
    raise InfeasibleParamsError("configuration-model repair failed; try another seed")


def _repair_pairing(pairs, rng, max_rounds: int = 200) -> bool:
    def bad_indices():
        seen = {}
        bad = set()
        for i, (a, b) in enumerate(pairs):
            if a == b:
                bad.add(i)
                continue
            key = (min(a, b), max(a, b))
            if key in seen:
                bad.add(i)
            else:
                seen[key] = i
        return sorted(bad)

    for _ in range(max_rounds):
        bad = bad_indices()
        if not bad:
            return True
        # resolve the whole batch against random partners, then re-scan
        for i in bad:
            j = rng.randrange(len(pairs))
            if i == j:
                continue
            side_i = rng.randrange(2)
            side_j = rng.randrange(2)
            pairs[i][side_i], pairs[j][side_j] = pairs[j][side_j], pairs[i][side_i]
    return False


def gnp(n: int, p: float, seed: int) -> Graph:
    if not 0 <= p <= 1:
        raise InfeasibleParamsError("p must be in [0, 1]")
    rng = random.Random(seed)
    edges = [
        (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p
    ]
    return Graph(n, edges)


def clique_plus_bridges(parts: int, size: int, bridges: int = 1) -> Graph:
    """`parts` disjoint cliques of `size`, consecutive cliques joined by
    `bridges` parallel-ish bridge edges (distinct endpoints)."""
    if parts < 1 or size < 2 or bridges < 0 or bridges > size:
        raise InfeasibleParamsError("bad clique-bridge parameters")
    n = parts * size
    edges = []
    for c in range(parts):
        base = c * size
        edges.extend(
            (base + i, base + j) for i in range(size) for j in range(i + 1, size)
        )
    for c in range(parts - 1):
        for b in range(bridges):
            edges.append((c * size + b, (c + 1) * size + b))
    return Graph(n, edges)


def bipartite_complete(a: int, b: int) -> Graph:
    return Graph(a + b, [(i, a + j) for i in range(a) for j in range(b)])


def two_hop_star_family(l1: int, l2: int, deg: int, seed: int) -> Graph:
    """Root + first layer + second layer, no intra-layer edges.

    The root connects to all of L1; L1-L2 is a random bipartite graph of
    right-degree `deg`. Exercises the 2-hop growth path (the root's
    neighborhood induces no edges).
    """
    if deg > l1 or l1 < 1 or l2 < 0:
        raise InfeasibleParamsError("bad two-hop star parameters")
    rng = random.Random(seed)
    n = 1 + l1 + l2
    edges = [(0, 1 + i) for i in range(l1)]
    for j in range(l2):
        y = 1 + l1 + j
        for x in rng.sample(range(1, 1 + l1), deg):
            edges.append((x, y))
    return Graph(n, edges)


def expander_certified(
    n: int,
    d: int,
    seed: int,
    phi_target: Fraction = Fraction(1, 8),
    max_tries: int = 20,
) -> Graph:
    """Random regular graph re-sampled until the spectral certifier accepts."""
    for t in range(max_tries):
        g = random_regular(n, d, seed + 1000003 * t)
        if certify_expansion(g, phi_target, CERT_SPECTRAL).accepted:
            return g
    raise InfeasibleParamsError(
        f"no certified ({n},{d}) expander at phi >= {phi_target} after {max_tries} tries"
    )


def generate_graph(family: str, params: dict, seed: int) -> Graph:
    if family == "random-regular":
        return random_regular(params["n"], params["d"], seed)
    if family == "gnp":
        return gnp(params["n"], params["p"], seed)
    if family == "clique-bridges":
        return clique_plus_bridges(
            params["parts"], params["size"], params.get("bridges", 1)
        )
    if family == "bipartite-complete":
        return bipartite_complete(params["a"], params["b"])
    if family == "two-hop-star":
        return two_hop_star_family(
            params["l1"], params["l2"], params["deg"], seed
        )
    if family == "expander-certified":
        return expander_certified(
            params["n"],
            params["d"],
            seed,
            phi_target=Fraction(params.get("phi", Fraction(1, 8))),
        )
    raise InfeasibleParamsError(f"unknown family {family!r}")


# -- adversaries -------------------------------------------------------------


def random_deletions(g: Graph, f: int, seed: int) -> frozenset[int]:
    if f > g.m:
        raise BudgetExceededError(f"cannot delete {f} of {g.m} edges")
    rng = random.Random(seed)
    return frozenset(rng.sample(sorted(g.edge_ids), f))


def degree_targeted_deletions(g: Graph, f: int) -> frozenset[int]:
    """Repeatedly strip an edge at a max-degree vertex (deterministic)."""
    if f > g.m:
        raise BudgetExceededError(f"cannot delete {f} of {g.m} edges")
    live = [set(ns) for ns in g.adjacency]
    out = set()
    for _ in range(f):
        v = max(range(g.n), key=lambda x: (len(live[x]), -x))
        w = min(live[v])
        live[v].discard(w)
        live[w].discard(v)
        out.add(edge_id(v, w, g.n))
    return frozenset(out)


def root_targeted_deletions(g: Graph, f: int, root: int, seed: int) -> frozenset[int]:
    """Concentrate the budget on the root's incident edges, then go random."""
    if f > g.m:
        raise BudgetExceededError(f"cannot delete {f} of {g.m} edges")
    incident = sorted(edge_id(root, w, g.n) for w in g.adjacency[root])
    out = incident[:f]
    if len(out) < f:
        rest = sorted(g.edge_ids - set(out))
        out += random.Random(seed).sample(rest, f - len(out))
    return frozenset(out)


def adaptive_greedy_deletions(
    g: Graph,
    f: int,
    seed: int,
    session_factory,
    probes_per_deletion: int | None = None,
    panel_size: int = 8,
) -> frozenset[int]:
    """Probe the deterministic oracle between deletions; pick the edge that
    maximizes the summed reported distance over a fixed pair panel.

    `session_factory(F)` must return a `query(a, b)` callable. Only legal
    against deterministic artifacts (no randomness to observe).
    """
    if f > g.m:
        raise BudgetExceededError(f"cannot delete {f} of {g.m} edges")
    rng = random.Random(seed)
    pairs = []
    while len(pairs) < panel_size:
        a, b = rng.randrange(g.n), rng.randrange(g.n)
        if a != b:
            pairs.append((a, b))
    budget = probes_per_deletion or max(1, 10 * f)
    chosen: set[int] = set()
    big = 4 * g.n
    for _ in range(f):
        pool = sorted(g.edge_ids - chosen)
        candidates = pool if len(pool) <= budget else rng.sample(pool, budget)
        best_eid, best_score = None, None
        for eid in sorted(candidates):
            query = session_factory(frozenset(chosen | {eid}))
            score = 0
            for a, b in pairs:
                ans = query(a, b)
                score += big if not isinstance(ans, int) else min(ans, big)
            if best_score is None or score > best_score:
                best_eid, best_score = eid, score
        chosen.add(best_eid)
    return frozenset(chosen)


def adversary_deletions(kind: str, g: Graph, f: int, seed: int, context=None) -> frozenset[int]:
    if f == 0:
        return frozenset()
    if kind == "random":
        return random_deletions(g, f, seed)
    if kind == "degree-targeted":
        return degree_targeted_deletions(g, f)
    if kind == "root-targeted":
        root = (context or {}).get("root", 0)
        return root_targeted_deletions(g, f, root, seed)
    if kind == "adaptive-greedy":
        factory = (context or {}).get("session_factory")
        if factory is None:
            raise InfeasibleParamsError("adaptive-greedy needs a session_factory")
        return adaptive_greedy_deletions(
            g, f, seed, factory, (context or {}).get("probes_per_deletion")
        )
    raise InfeasibleParamsError(f"unknown adversary {kind!r}")
