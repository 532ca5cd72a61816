"""Deterministic fault-tolerant distance oracle over recursive expander levels.

Build: repeatedly decompose the residual graph at min degree
D = c_D * sqrt(f) * log(n)^deg_exponent, storing per component only the
vertex list, the per-vertex degrees, and a per-vertex syndrome sketch of the
incident component edges (k = floor(4f/D)); recursion stops when the
residual drops below c_stop * n * sqrt(f) * log(n)^{3 or 4} edges and the
residual is stored verbatim.

Query: route each deleted edge to the first component (level ascending)
whose vertex set contains both endpoints, decrement degrees and subtract
the edge from both endpoint sketches, then answer distances on the implicit
graph H = residual ∪ (per component: clique on vertices of degree
>= 4f/D + 1, plus the exactly-decoded neighborhoods of the rest), scaled by
the stretch multiplier. The distance on H itself never exceeds the true
post-deletion distance; the scaled answer never undershoots it.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction

from .decomposition import CERT_BRUTE_FORCE, CERT_SPECTRAL, DecompositionConfig, decompose
from .errors import (
    BudgetExceededError,
    DecodeFailureError,
    InfeasibleParamsError,
    InvalidDeletionError,
    NotSparseError,
    OutOfRangeError,
    UnknownEdgeError,
)
from .graph import UNREACHABLE, Graph, edge_from_id, edge_id
from .ioutil import ByteReader, ByteWriter, element_width, pack_elements, packed_size, unpack_elements
from .sketch import SyndromeSketch, choose_prime

ORACLE_MAGIC = b"FTDO"
KIND_EXPANDER_ORACLE = 1


class _Residual:
    def __repr__(self):
        return "RESIDUAL"


RESIDUAL = _Residual()


def _log2n(n: int) -> float:
    return math.log2(n) if n >= 2 else 1.0


@dataclass(frozen=True)
class OracleConfig:
    f: int
    c_d: float = 8.0
    c_stop: float = 1.0
    c_stretch: float = 1.0
    deg_exponent: int = 1
    phi_target: Fraction | None = None
    peel_multiplier: float = 1.0
    certifier: str = CERT_SPECTRAL
    max_levels: int = 64

    def __post_init__(self):
        if self.f < 0:
            raise InfeasibleParamsError("fault budget must be >= 0")
        if min(self.c_d, self.c_stop, self.c_stretch) <= 0:
            raise InfeasibleParamsError("constants must be positive")
        if self.deg_exponent not in (1, 2):
            raise InfeasibleParamsError("deg_exponent must be 1 or 2")

    def min_degree(self, n: int) -> int:
        raw = self.c_d * math.sqrt(self.f) * _log2n(n) ** self.deg_exponent
        return max(1, int(raw))

    def sparsity(self, n: int) -> int:
        d = self.min_degree(n)
        return min(4 * self.f // d, max(1, n - 1)) if self.f else 0

    def stop_threshold(self, n: int) -> int:
        log_exp = 3 if self.deg_exponent == 1 else 4
        raw = self.c_stop * n * math.sqrt(self.f) * _log2n(n) ** log_exp
        return max(1, math.ceil(raw))

    def stretch_multiplier(self, n: int) -> int:
        ln = _log2n(n)
        if self.deg_exponent == 1:
            raw = self.c_stretch * ln * math.log2(ln + 2)
        else:
            raw = self.c_stretch * ln**3
        return max(1, math.ceil(raw))

    def resolved_phi(self, n: int) -> Fraction:
        if self.phi_target is not None:
            return self.phi_target
        denom = max(2, round(_log2n(n)) ** self.deg_exponent)
        return Fraction(1, denom)


@dataclass
class OracleComponent:
    vertices: tuple[int, ...]
    degrees: dict[int, int]
    sketches: dict[int, SyndromeSketch]

    @property
    def min_degree(self) -> int:
        return min(self.degrees.values())


def _is_high(deg: int, k: int) -> bool:
    # High-degree means deg >= floor(4f/D) + 1 = k + 1. Pinning the split to
    # the sketch capacity k keeps every low vertex decodable: the bad-vertex
    # count is an integer <= floor(4f/D), so the short-path guarantee still
    # covers every high vertex.
    return deg > k


class ExpanderOracle:
    """Immutable after build; queries go through sessions."""

    def __init__(self, n, config, levels, residual, u, q):
        self.n = n
        self.config = config
        self.levels: list[list[OracleComponent]] = levels
        self.residual: frozenset[int] = residual
        self.u = u
        self.q = q
        self.d = config.min_degree(n)
        self.k = config.sparsity(n)
        self._vertex_maps = [
            {v: ci for ci, comp in enumerate(level) for v in comp.vertices}
            for level in levels
        ]

    @property
    def level_count(self) -> int:
        return len(self.levels)

    def locate_edge(self, eid: int):
        """First component (level ascending) containing the edge's endpoints.

        Returns (level, component-index) or RESIDUAL. UnknownEdgeError fires
        only when no stored structure can possibly hold the edge; full
        membership checks would require storing E, which the layout forbids.
        """
        if not 0 <= eid < max(1, self.u):
            raise OutOfRangeError(f"edge id {eid} out of range")
        a, b = edge_from_id(eid, self.n)
        for lvl, vmap in enumerate(self._vertex_maps):
            ca = vmap.get(a)
            if ca is not None and ca == vmap.get(b):
                return (lvl, ca)
        if eid in self.residual:
            return RESIDUAL
        raise UnknownEdgeError(f"edge {eid} not covered by any component or residual")

    def open_session(self, deletions) -> "QuerySession":
        session = QuerySession(self)
        session.apply(deletions)
        return session

    # -- byte layout (versioned; the one-way message):
    #    magic "FTDO", version u16, kind u8, n u32, f u64,
    #    c_d/c_stop/c_stretch f64, deg_exponent u8, phi num/den u32,
    #    peel_multiplier f64, certifier u8, D u32, k u32, u u64, q u64,
    #    level count u16; per level comp count u32; per component:
    #    nv u32, vertices u32[] sorted, degrees u32[], syndrome payloads
    #    bit-packed per vertex at ceil(log2 q) bits * (2k+1);
    #    residual count u32 + edge ids u32[] sorted.
    def to_bytes(self) -> bytes:
        cfg = self.config
        bw = ByteWriter()
        bw.raw(ORACLE_MAGIC)
        bw.u16(1)
        bw.u8(KIND_EXPANDER_ORACLE)
        bw.u32(self.n)
        bw.u64(cfg.f)
        bw.f64(cfg.c_d)
        bw.f64(cfg.c_stop)
        bw.f64(cfg.c_stretch)
        bw.u8(cfg.deg_exponent)
        phi = cfg.resolved_phi(self.n)
        bw.u32(phi.numerator)
        bw.u32(phi.denominator)
        bw.f64(cfg.peel_multiplier)
        bw.u8(0 if cfg.certifier == CERT_SPECTRAL else 1)
        bw.u32(self.d)
        bw.u32(self.k)
        bw.u64(self.u)
        bw.u64(self.q)
        width = element_width(self.q)
        rows = 2 * self.k + 1
        bw.u16(len(self.levels))
        for level in self.levels:
            bw.u32(len(level))
            for comp in level:
                bw.u32(len(comp.vertices))
                for v in comp.vertices:
                    bw.u32(v)
                for v in comp.vertices:
                    bw.u32(comp.degrees[v])
                for v in comp.vertices:
                    bw.raw(pack_elements(comp.sketches[v].z, width))
        bw.u32(len(self.residual))
        for eid in sorted(self.residual):
            bw.u32(eid)
        return bw.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "ExpanderOracle":
        br = ByteReader(data)
        if br.raw(4) != ORACLE_MAGIC or br.u16() != 1 or br.u8() != KIND_EXPANDER_ORACLE:
            raise OutOfRangeError("bad oracle header")
        n = br.u32()
        f = br.u64()
        c_d, c_stop, c_stretch = br.f64(), br.f64(), br.f64()
        deg_exponent = br.u8()
        phi = Fraction(br.u32(), br.u32())
        peel_multiplier = br.f64()
        certifier = CERT_SPECTRAL if br.u8() == 0 else CERT_BRUTE_FORCE
        cfg = OracleConfig(
            f=f,
            c_d=c_d,
            c_stop=c_stop,
            c_stretch=c_stretch,
            deg_exponent=deg_exponent,
            phi_target=phi,
            peel_multiplier=peel_multiplier,
            certifier=certifier,
        )
        d = br.u32()
        k = br.u32()
        u = br.u64()
        q = br.u64()
        width = element_width(q)
        rows = 2 * k + 1
        levels = []
        for _ in range(br.u16()):
            comps = []
            for _ in range(br.u32()):
                nv = br.u32()
                verts = tuple(br.u32() for _ in range(nv))
                degs = {v: br.u32() for v in verts}
                sketches = {}
                for v in verts:
                    z = unpack_elements(br.raw(packed_size(rows, width)), rows, width)
                    sketches[v] = SyndromeSketch(u, k, q=q, z=z)
                comps.append(OracleComponent(verts, degs, sketches))
            levels.append(comps)
        residual = frozenset(br.u32() for _ in range(br.u32()))
        return cls(n, cfg, levels, residual, u, q)

    def measured_bits(self) -> int:
        return 8 * len(self.to_bytes())


def build_oracle(g: Graph, cfg: OracleConfig) -> ExpanderOracle:
    n = g.n
    if cfg.f > n * (n - 1) // 2:
        raise InfeasibleParamsError("fault budget exceeds the edge universe")
    u = max(2, n * (n - 1) // 2)
    q = choose_prime(u)
    d = cfg.min_degree(n)
    k = cfg.sparsity(n)
    stop = cfg.stop_threshold(n)
    dcfg = DecompositionConfig(
        min_degree=d,
        phi_target=cfg.resolved_phi(n),
        peel_multiplier=cfg.peel_multiplier,
        certifier=cfg.certifier,
    )
    levels: list[list[OracleComponent]] = []
    residual = set(g.edge_ids)
    while len(residual) >= stop and len(levels) < cfg.max_levels:
        sub = Graph.from_edge_ids(n, residual)
        dec = decompose(sub, dcfg)
        if not dec.components:
            break
        level = []
        for comp_set in dec.components:
            verts = tuple(sorted(comp_set))
            degrees = {}
            sketches = {}
            for v in verts:
                incident = [edge_id(v, w, n) for w in sub.adjacency[v] if w in comp_set]
                degrees[v] = len(incident)
                sketches[v] = SyndromeSketch.encode(u, k, incident, q=q)
            level.append(OracleComponent(verts, degrees, sketches))
        levels.append(level)
        residual = set(dec.crossing)
    return ExpanderOracle(n, cfg, levels, frozenset(residual), u, q)


class QuerySession:
    """Mutable deletion overlay on an immutable oracle.

    Holds copies of only the degrees/sketches the deletions touch; the base
    oracle is never mutated and many sessions may coexist.
    """

    def __init__(self, oracle: ExpanderOracle):
        self.oracle = oracle
        self.deleted: set[int] = set()
        self.residual: set[int] = set(oracle.residual)
        self._degrees: dict[tuple[int, int], dict[int, int]] = {}
        self._sketches: dict[tuple[int, int, int], SyndromeSketch] = {}
        self._h = None

    def degree(self, lvl: int, ci: int, v: int) -> int:
        degs = self._degrees.get((lvl, ci))
        if degs is not None and v in degs:
            return degs[v]
        return self.oracle.levels[lvl][ci].degrees[v]

    def _mut_degrees(self, lvl: int, ci: int) -> dict[int, int]:
        key = (lvl, ci)
        if key not in self._degrees:
            self._degrees[key] = {}
        return self._degrees[key]

    def sketch(self, lvl: int, ci: int, v: int) -> SyndromeSketch:
        return self._sketches.get((lvl, ci, v), self.oracle.levels[lvl][ci].sketches[v])

    def _mut_sketch(self, lvl: int, ci: int, v: int) -> SyndromeSketch:
        key = (lvl, ci, v)
        if key not in self._sketches:
            self._sketches[key] = self.oracle.levels[lvl][ci].sketches[v].copy()
        return self._sketches[key]

    def apply(self, deletions) -> None:
        dels = sorted(set(deletions))
        if len(self.deleted) + len(dels) > self.oracle.config.f:
            raise BudgetExceededError(
                f"deletion budget f={self.oracle.config.f} exceeded"
            )
        for eid in dels:
            if eid in self.deleted:
                raise InvalidDeletionError(f"edge {eid} already deleted")
        for eid in dels:
            loc = self.oracle.locate_edge(eid)
            if loc is RESIDUAL:
                if eid not in self.residual:
                    raise InvalidDeletionError(f"residual edge {eid} already gone")
                self.residual.discard(eid)
            else:
                lvl, ci = loc
                a, b = edge_from_id(eid, self.oracle.n)
                degs = self._mut_degrees(lvl, ci)
                for x in (a, b):
                    cur = self.degree(lvl, ci, x)
                    if cur <= 0:
                        raise InvalidDeletionError(
                            f"vertex {x} has no remaining edges in its component"
                        )
                    degs[x] = cur - 1
                    self._mut_sketch(lvl, ci, x).update(eid, -1)
            self.deleted.add(eid)
        self._h = None

    # -- H construction ---------------------------------------------------
    def _ensure_h(self):
        if self._h is not None:
            return self._h
        oracle = self.oracle
        n = oracle.n
        k = oracle.k
        explicit = [0] * n
        for eid in self.residual:
            a, b = edge_from_id(eid, n)
            explicit[a] |= 1 << b
            explicit[b] |= 1 << a
        clique_masks: list[int] = []
        vertex_cliques: dict[int, list[int]] = {}
        for lvl, level in enumerate(oracle.levels):
            for ci, comp in enumerate(level):
                touched = (lvl, ci) in self._degrees
                if not touched and _is_high(comp.min_degree, k):
                    high = comp.vertices
                    low = ()
                else:
                    high = tuple(
                        v for v in comp.vertices if _is_high(self.degree(lvl, ci, v), k)
                    )
                    low = tuple(v for v in comp.vertices if v not in set(high))
                for v in low:
                    try:
                        edges = self.sketch(lvl, ci, v).decode()
                    except NotSparseError as exc:
                        raise DecodeFailureError(
                            f"sketch of vertex {v} failed to decode "
                            f"(level {lvl}, component {ci}): upstream deletion "
                            "contract violated",
                            vertex=v,
                            component=(lvl, ci),
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
        self._h = (explicit, clique_masks, vertex_cliques)
        return self._h

    def h_distances(self, source: int) -> list[int]:
        """BFS distances in H; -1 marks unreachable."""
        explicit, clique_masks, vertex_cliques = self._ensure_h()
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

    def h_graph(self) -> Graph:
        """Materialized H (cliques expanded); for verification at desk scale."""
        explicit, clique_masks, vertex_cliques = self._ensure_h()
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

    def query_distance(self, a: int, b: int):
        oracle = self.oracle
        if not (0 <= a < oracle.n and 0 <= b < oracle.n):
            raise OutOfRangeError("query vertex out of range")
        if a == b:
            return 0
        raw = self.h_distances(a)[b]
        if raw < 0:
            return UNREACHABLE
        return raw * oracle.config.stretch_multiplier(oracle.n)


class WeightedOracle:
    """Weight-bucketed family of unweighted oracles (weights >= 1, ints)."""

    def __init__(self, n: int, config: OracleConfig, buckets: dict[int, ExpanderOracle]):
        self.n = n
        self.config = config
        self.buckets = buckets

    def measured_bits(self) -> int:
        bw = ByteWriter()
        bw.u32(len(self.buckets))
        for b in sorted(self.buckets):
            blob = self.buckets[b].to_bytes()
            bw.u32(b)
            bw.u32(len(blob))
            bw.raw(blob)
        return 8 * len(bw.getvalue())

    def open_session(self, deletions) -> "WeightedQuerySession":
        return WeightedQuerySession(self, deletions)


def build_weighted_oracle(g: Graph, cfg: OracleConfig) -> WeightedOracle:
    weights = g.weights or {eid: 1 for eid in g.edge_ids}
    if any(w < 1 for w in weights.values()):
        raise InfeasibleParamsError("weights must be positive integers")
    by_bucket: dict[int, set[int]] = {}
    for eid in g.edge_ids:
        by_bucket.setdefault(weights[eid].bit_length() - 1, set()).add(eid)
    buckets = {
        b: build_oracle(Graph.from_edge_ids(g.n, eids), cfg)
        for b, eids in sorted(by_bucket.items())
    }
    return WeightedOracle(g.n, cfg, buckets)


class WeightedQuerySession:
    def __init__(self, woracle: WeightedOracle, deletions):
        self.woracle = woracle
        per_bucket: dict[int, set[int]] = {}
        for eid, w in sorted(deletions):
            b = w.bit_length() - 1
            if b not in woracle.buckets:
                raise InvalidDeletionError(
                    f"declared weight {w} maps to empty bucket {b}"
                )
            per_bucket.setdefault(b, set()).add(eid)
        self.sessions = {}
        for b, eids in per_bucket.items():
            try:
                self.sessions[b] = woracle.buckets[b].open_session(eids)
            except UnknownEdgeError as exc:
                raise InvalidDeletionError(str(exc)) from exc
        for b, oracle in woracle.buckets.items():
            if b not in self.sessions:
                self.sessions[b] = oracle.open_session(())

    def _weighted_adjacency(self) -> dict[int, dict[int, int]]:
        adj: dict[int, dict[int, int]] = {}
        for b, session in self.sessions.items():
            scale = 1 << b
            for a, c in session.h_graph().edge_pairs():
                best = adj.setdefault(a, {})
                if c not in best or best[c] > scale:
                    best[c] = scale
                    adj.setdefault(c, {})[a] = scale
        return adj

    def query_distance(self, a: int, b: int):
        n = self.woracle.n
        if not (0 <= a < n and 0 <= b < n):
            raise OutOfRangeError("query vertex out of range")
        if a == b:
            return 0
        adj = self._weighted_adjacency()
        dist = {a: 0}
        heap = [(0, a)]
        while heap:
            d, v = heapq.heappop(heap)
            if d > dist.get(v, float("inf")):
                continue
            if v == b:
                break
            for w, weight in adj.get(v, {}).items():
                nd = d + weight
                if nd < dist.get(w, float("inf")):
                    dist[w] = nd
                    heapq.heappush(heap, (nd, w))
        if b not in dist:
            return UNREACHABLE
        return dist[b] * self.woracle.config.stretch_multiplier(n)
