"""Constant-stretch oracle: cover dense edges with redundant one/two-hop stars.

Each star is grown from a fresh root: either the root's neighborhood already
induces a dense subgraph (1-hop star, min degree >= d/10), or the bipartite
graph between the neighborhood and its second hop is peeled to min degree
>= d^2/(2n) (2-hop star; only root-to-L1 and L1-to-L2 edges belong to the
star). Every edge that reaches the covering threshold is retired from the
working graph, so "the first threshold-many eligible stars" exactly
reproduces, at query time, which stars' sketches saw the edge. Queries
rebuild an approximation graph from the uncovered remainder plus, for every
star whose root kept most of its covered edges, a clique on the surviving
high-degree members and the decoded neighborhoods of the rest; reported
distances carry a flat multiplier of 7.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    BudgetExceededError,
    DecodeFailureError,
    DegreeTooLowError,
    InfeasibleParamsError,
    InvalidDeletionError,
    NotSparseError,
    OutOfRangeError,
)
from .graph import UNREACHABLE, Graph, edge_from_id, edge_id
from .ioutil import ByteReader, ByteWriter, element_width, pack_elements, packed_size, unpack_elements
from .sketch import SyndromeSketch, choose_prime

STAR_MAGIC = b"FTDS"
STRETCH = 7


def _log2n(n: int) -> float:
    return math.log2(n) if n >= 2 else 1.0


@dataclass(frozen=True)
class StarConfig:
    f: int
    cover_multiplier: float = 1.0
    sketch_multiplier: float = 1.0
    target_multiplier: float = 1.0
    gate_multiplier: float = 1.0

    def __post_init__(self):
        if self.f < 0:
            raise InfeasibleParamsError("fault budget must be >= 0")
        if min(
            self.cover_multiplier,
            self.sketch_multiplier,
            self.target_multiplier,
            self.gate_multiplier,
        ) <= 0:
            raise InfeasibleParamsError("multipliers must be positive")

    def covering_threshold(self) -> int:
        return max(1, round(10 * self.cover_multiplier * math.ceil(self.f ** (1 / 3))))

    def sketch_k(self, n: int) -> int:
        raw = int(100 * self.sketch_multiplier * self.f ** (1 / 3))
        return min(max(1, raw), max(1, n - 1))

    def target_degree(self, n: int) -> int:
        raw = self.target_multiplier * math.sqrt(n) * self.f ** (1 / 3) * _log2n(n)
        return max(1, math.ceil(raw))

    def degree_gate(self, n: int) -> int:
        raw = 5 * self.gate_multiplier * self.f ** (1 / 3) / _log2n(n) ** 2
        return max(1, math.ceil(raw))


@dataclass
class StarRecord:
    root: int
    hops: int
    l1: frozenset[int]
    l2: frozenset[int]
    degrees: dict[int, int]
    sketches: dict[int, SyndromeSketch] | None
    build_index: int
    ladder_degree: int
    gate_ok: bool = True

    def members(self) -> tuple[int, ...]:
        return (self.root,) + tuple(sorted(self.l1)) + tuple(sorted(self.l2))

    def min_star_degree(self) -> int:
        return min(self.degrees.values()) if self.degrees else 0


def star_covers(star: StarRecord, eid: int, n: int) -> bool:
    """Eligibility: is the vertex pair of eid inside the star's edge shape?"""
    a, b = edge_from_id(eid, n)
    if star.hops == 1:
        hub = star.l1 | {star.root}
        return a in hub and b in hub
    if a == star.root:
        return b in star.l1
    if b == star.root:
        return a in star.l1
    return (a in star.l1 and b in star.l2) or (b in star.l1 and a in star.l2)


def _peel_sets(neigh: dict[int, set[int]], threshold: int) -> set[int]:
    """Kept vertices of the <threshold>-core of a dict-of-sets graph."""
    deg = {v: len(ns) for v, ns in neigh.items()}
    kept = set(neigh)
    queue = [v for v, dv in deg.items() if dv < threshold]
    while queue:
        v = queue.pop()
        if v not in kept:
            continue
        kept.discard(v)
        for w in neigh[v]:
            if w in kept:
                deg[w] -= 1
                if deg[w] < threshold:
                    queue.append(w)
    return kept


def _grow_star(adj, alive: set[int], v: int, d: int, n: int):
    """(hops, l1, l2) for a star rooted at v in the live view.

    ``adj(x)`` yields live neighbors of x; only vertices in ``alive`` count.
    """
    gamma = {w for w in adj(v) if w in alive}
    intra = sum(1 for x in gamma for w in adj(x) if w in gamma) // 2
    if 10 * intra >= len(gamma) * d:
        t1 = max(1, math.ceil(d / 10))
        sub = {x: {w for w in adj(x) if w in gamma} for x in gamma}
        l1 = _peel_sets(sub, t1)
        if l1:
            return 1, frozenset(l1), frozenset()
    second: set[int] = set()
    for x in gamma:
        for w in adj(x):
            if w in alive and w != v and w not in gamma:
                second.add(w)
    bip: dict[int, set[int]] = {}
    for x in gamma:
        bip[x] = {w for w in adj(x) if w in second}
    for y in second:
        bip[y] = {w for w in adj(y) if w in gamma}
    t2 = max(1, math.ceil(d * d / (2 * n)))
    kept = _peel_sets(bip, t2)
    l1 = kept & gamma
    l2 = kept & second
    if not l1:
        # tiny-d corner: neither side survives; the trivial 1-hop star on the
        # whole neighborhood still has min degree >= 1 >= d/10 for d <= 10
        return 1, frozenset(gamma), frozenset()
    return 2, frozenset(l1), frozenset(l2)


def _star_edge_pairs(star_hops, root, l1, l2, adj, alive):
    """Live edges belonging to the star shape, as vertex pairs."""
    pairs = []
    if star_hops == 1:
        hub = sorted(l1 | {root})
        hub_set = set(hub)
        for x in hub:
            for w in adj(x):
                if w in hub_set and x < w and w in alive:
                    pairs.append((x, w))
    else:
        for x in sorted(l1):
            if x in adj(root):
                pairs.append((min(root, x), max(root, x)))
            for w in adj(x):
                if w in l2 and w in alive:
                    pairs.append((min(x, w), max(x, w)))
    return pairs


def construct_star(g: Graph, v: int, d: int, sketch_k: int | None = None) -> StarRecord:
    """Grow a star from v in a graph of min degree >= d (spec operation)."""
    if g.m == 0 or min(g.degrees) < d:
        raise DegreeTooLowError(f"graph min degree below {d}")
    if not 0 <= v < g.n:
        raise OutOfRangeError(f"root {v} out of range")
    alive = set(range(g.n))
    adj = lambda x: g.adjacency[x]
    hops, l1, l2 = _grow_star(adj, alive, v, d, g.n)
    pairs = _star_edge_pairs(hops, v, l1, l2, adj, alive)
    degrees = {w: 0 for w in (v, *l1, *l2)}
    for a, b in pairs:
        degrees[a] += 1
        degrees[b] += 1
    sketches = None
    if sketch_k is not None:
        u = max(2, g.n * (g.n - 1) // 2)
        q = choose_prime(u)
        sketches = {w: SyndromeSketch(u, sketch_k, q=q) for w in degrees}
        for a, b in pairs:
            eid = edge_id(a, b, g.n)
            sketches[a].update(eid)
            sketches[b].update(eid)
    return StarRecord(v, hops, l1, l2, degrees, sketches, 0, d)


class StarOracle:
    def __init__(self, n, config, stars, g_remaining, u, q, roots_exhausted=False):
        self.n = n
        self.config = config
        self.f = config.f
        self.stars: list[StarRecord] = stars
        self.g_remaining: frozenset[int] = g_remaining
        self.u = u
        self.q = q
        self.covering_threshold = config.covering_threshold()
        self.target_degree = config.target_degree(n)
        self.sketch_k = config.sketch_k(n)
        self.degree_gate = config.degree_gate(n)
        if self.degree_gate > self.sketch_k + 1:
            # below-gate vertices must stay within sketch capacity
            raise InfeasibleParamsError(
                "degree gate exceeds sketch sparsity; low vertices would be undecodable"
            )
        self.regime_ok = n <= config.f <= int(n**1.5)
        self.roots_exhausted = roots_exhausted

    def replay_covering(self, eid: int) -> list[int]:
        """Indices of the stars that covered eid: the first threshold-many
        eligible stars in build order."""
        out = []
        for i, star in enumerate(self.stars):
            if star_covers(star, eid, self.n):
                out.append(i)
                if len(out) >= self.covering_threshold:
                    break
        return out

    def open_session(self, deletions) -> "StarSession":
        session = StarSession(self)
        session.apply(deletions)
        return session

    # -- byte layout: magic, version u16, n u32, f u64, multipliers f64 x4,
    #    u u64, q u64, k u32, star count u32; per star: root u32, hops u8,
    #    ladder_degree u32, |L1| u32 + ids, |L2| u32 + ids, degrees u32[]
    #    (members order: root, sorted L1, sorted L2), sketch payloads
    #    bit-packed; remaining count u32 + edge ids u32[].
    def to_bytes(self) -> bytes:
        cfg = self.config
        bw = ByteWriter()
        bw.raw(STAR_MAGIC)
        bw.u16(1)
        bw.u32(self.n)
        bw.u64(cfg.f)
        bw.f64(cfg.cover_multiplier)
        bw.f64(cfg.sketch_multiplier)
        bw.f64(cfg.target_multiplier)
        bw.f64(cfg.gate_multiplier)
        bw.u64(self.u)
        bw.u64(self.q)
        bw.u32(self.sketch_k)
        bw.u8(1 if self.roots_exhausted else 0)
        width = element_width(self.q)
        bw.u32(len(self.stars))
        for star in self.stars:
            bw.u32(star.root)
            bw.u8(star.hops)
            bw.u32(star.ladder_degree)
            bw.u32(len(star.l1))
            for v in sorted(star.l1):
                bw.u32(v)
            bw.u32(len(star.l2))
            for v in sorted(star.l2):
                bw.u32(v)
            for v in star.members():
                bw.u32(star.degrees[v])
            for v in star.members():
                bw.raw(pack_elements(star.sketches[v].z, width))
        bw.u32(len(self.g_remaining))
        for eid in sorted(self.g_remaining):
            bw.u32(eid)
        return bw.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "StarOracle":
        br = ByteReader(data)
        if br.raw(4) != STAR_MAGIC or br.u16() != 1:
            raise OutOfRangeError("bad star oracle header")
        n = br.u32()
        f = br.u64()
        cfg = StarConfig(
            f=f,
            cover_multiplier=br.f64(),
            sketch_multiplier=br.f64(),
            target_multiplier=br.f64(),
            gate_multiplier=br.f64(),
        )
        u = br.u64()
        q = br.u64()
        k = br.u32()
        roots_exhausted = bool(br.u8())
        width = element_width(q)
        rows = 2 * k + 1
        stars = []
        for idx in range(br.u32()):
            root = br.u32()
            hops = br.u8()
            ladder = br.u32()
            l1 = frozenset(br.u32() for _ in range(br.u32()))
            l2 = frozenset(br.u32() for _ in range(br.u32()))
            members = (root,) + tuple(sorted(l1)) + tuple(sorted(l2))
            degrees = {v: br.u32() for v in members}
            sketches = {}
            for v in members:
                z = unpack_elements(br.raw(packed_size(rows, width)), rows, width)
                sketches[v] = SyndromeSketch(u, k, q=q, z=z)
            stars.append(StarRecord(root, hops, l1, l2, degrees, sketches, idx, ladder))
        remaining = frozenset(br.u32() for _ in range(br.u32()))
        return cls(n, cfg, stars, remaining, u, q, roots_exhausted=roots_exhausted)

    def measured_bits(self) -> int:
        return 8 * len(self.to_bytes())


def build_star_oracle(
    g: Graph, config: StarConfig, record_coverage: bool = False
) -> StarOracle:
    n = g.n
    u = max(2, n * (n - 1) // 2)
    q = choose_prime(u)
    threshold = config.covering_threshold()
    k = config.sketch_k(n)
    target = config.target_degree(n)

    live = [set(ns) for ns in g.adjacency]
    counts: dict[int, int] = {}
    coverage: dict[int, list[int]] = {}
    unused = set(range(n))
    stars: list[StarRecord] = []
    roots_exhausted = False

    d = n // 2
    while d >= target:
        while True:
            kept = _peel_sets({v: live[v] for v in range(n)}, d)
            if not kept:
                break
            candidates = sorted(kept & unused)
            if not candidates:
                roots_exhausted = True
                break
            v = candidates[0]
            adj = lambda x: live[x]
            hops, l1, l2 = _grow_star(adj, kept, v, d, n)
            pairs = _star_edge_pairs(hops, v, l1, l2, adj, kept)
            degrees = {w: 0 for w in (v, *l1, *l2)}
            sketches = {w: SyndromeSketch(u, k, q=q) for w in degrees}
            for a, b in pairs:
                degrees[a] += 1
                degrees[b] += 1
                eid = edge_id(a, b, n)
                sketches[a].update(eid)
                sketches[b].update(eid)
                counts[eid] = counts.get(eid, 0) + 1
                if record_coverage:
                    coverage.setdefault(eid, []).append(len(stars))
                if counts[eid] >= threshold:
                    live[a].discard(b)
                    live[b].discard(a)
            star = StarRecord(v, hops, l1, l2, degrees, sketches, len(stars), d)
            dstar = star.min_star_degree()
            star.gate_ok = dstar * dstar >= 10 * config.f  # d*/2 >= 5f/d*
            stars.append(star)
            unused.discard(v)
        d //= 2

    remaining = frozenset(
        eid for eid in g.edge_ids if counts.get(eid, 0) < threshold
    )
    oracle = StarOracle(n, config, stars, remaining, u, q, roots_exhausted=roots_exhausted)
    if record_coverage:
        oracle.debug_coverage = coverage
    return oracle


class StarSession:
    """Deletion overlay on a star oracle; base oracle never mutated."""

    def __init__(self, oracle: StarOracle):
        self.oracle = oracle
        self.deleted: set[int] = set()
        self.remaining: set[int] = set(oracle.g_remaining)
        self.root_decrease: dict[int, int] = {}
        self._degrees: dict[int, dict[int, int]] = {}
        self._sketches: dict[tuple[int, int], SyndromeSketch] = {}
        self._approx = None

    def degree(self, si: int, v: int) -> int:
        degs = self._degrees.get(si)
        if degs is not None and v in degs:
            return degs[v]
        return self.oracle.stars[si].degrees[v]

    def sketch(self, si: int, v: int) -> SyndromeSketch:
        return self._sketches.get((si, v), self.oracle.stars[si].sketches[v])

    def _mut_sketch(self, si: int, v: int) -> SyndromeSketch:
        key = (si, v)
        if key not in self._sketches:
            self._sketches[key] = self.oracle.stars[si].sketches[v].copy()
        return self._sketches[key]

    def apply(self, deletions) -> None:
        oracle = self.oracle
        dels = sorted(set(deletions))
        if len(self.deleted) + len(dels) > oracle.f:
            raise BudgetExceededError(f"deletion budget f={oracle.f} exceeded")
        for eid in dels:
            if eid in self.deleted:
                raise InvalidDeletionError(f"edge {eid} already deleted")
            covering = oracle.replay_covering(eid)
            if not covering and eid not in oracle.g_remaining:
                raise InvalidDeletionError(f"edge {eid} unknown to the oracle")
            a, b = edge_from_id(eid, oracle.n)
            for si in covering:
                degs = self._degrees.setdefault(si, {})
                for x in (a, b):
                    cur = self.degree(si, x)
                    if cur <= 0:
                        raise InvalidDeletionError(
                            f"vertex {x} already has no star edges in star {si}"
                        )
                    degs[x] = cur - 1
                    self._mut_sketch(si, x).update(eid, -1)
                star = oracle.stars[si]
                if star.root in (a, b):
                    self.root_decrease[si] = self.root_decrease.get(si, 0) + 1
            self.remaining.discard(eid)
            self.deleted.add(eid)
        self._approx = None

    def _ensure_approx(self):
        if self._approx is not None:
            return self._approx
        oracle = self.oracle
        n = oracle.n
        gate = oracle.degree_gate
        explicit = [0] * n
        for eid in self.remaining:
            a, b = edge_from_id(eid, n)
            explicit[a] |= 1 << b
            explicit[b] |= 1 << a
        clique_masks: list[int] = []
        vertex_cliques: dict[int, list[int]] = {}
        for si, star in enumerate(oracle.stars):
            decrease = self.root_decrease.get(si, 0)
            if 2 * decrease > oracle.target_degree:
                continue  # root too damaged; star abstains
            high = [v for v in star.members() if self.degree(si, v) >= gate]
            low = [v for v in star.members() if self.degree(si, v) < gate]
            for v in low:
                try:
                    edges = self.sketch(si, v).decode()
                except NotSparseError as exc:
                    raise DecodeFailureError(
                        f"star {si} sketch of vertex {v} failed to decode",
                        vertex=v,
                        component=si,
                    ) from exc
                for eid in edges:
                    a, b = edge_from_id(eid, n)
                    explicit[a] |= 1 << b
                    explicit[b] |= 1 << a
            if len(high) >= 2:
                mask = 0
                for v in high:
                    mask |= 1 << v
                idx = len(clique_masks)
                clique_masks.append(mask)
                for v in high:
                    vertex_cliques.setdefault(v, []).append(idx)
        self._approx = (explicit, clique_masks, vertex_cliques)
        return self._approx

    def approx_distances(self, source: int) -> list[int]:
        explicit, clique_masks, vertex_cliques = self._ensure_approx()
        n = self.oracle.n
        dist = [-1] * n
        dist[source] = 0
        visited = 1 << source
        frontier = 1 << source
        used = [False] * len(clique_masks)
        depth = 0
        while frontier:
            nxt = 0
            fr = frontier
            while fr:
                bit = fr & -fr
                fr ^= bit
                v = bit.bit_length() - 1
                nxt |= explicit[v]
                for ci in vertex_cliques.get(v, ()):
                    if not used[ci]:
                        used[ci] = True
                        nxt |= clique_masks[ci]
            nxt &= ~visited
            visited |= nxt
            depth += 1
            fr = nxt
            while fr:
                bit = fr & -fr
                fr ^= bit
                dist[bit.bit_length() - 1] = depth
            frontier = nxt
        return dist

    def approx_graph(self) -> Graph:
        explicit, clique_masks, _ = self._ensure_approx()
        n = self.oracle.n
        edges = set()
        for v in range(n):
            mask = explicit[v]
            while mask:
                bit = mask & -mask
                mask ^= bit
                w = bit.bit_length() - 1
                if v < w:
                    edges.add((v, w))
        for cmask in clique_masks:
            members = []
            mm = cmask
            while mm:
                bit = mm & -mm
                mm ^= bit
                members.append(bit.bit_length() - 1)
            for i, v in enumerate(members):
                for w in members[i + 1 :]:
                    edges.add((v, w))
        return Graph(n, sorted(edges))

    def query_distance(self, s: int, t: int):
        oracle = self.oracle
        if not (0 <= s < oracle.n and 0 <= t < oracle.n):
            raise OutOfRangeError("query vertex out of range")
        if s == t:
            return 0
        raw = self.approx_distances(s)[t]
        if raw < 0:
            return UNREACHABLE
        return STRETCH * raw
