"""Randomized sketch from which a spanner of G - F is recovered after
oblivious deletions.

The build walks a degree ladder D = n/2, n/4, ... down to the robustness
floor, running the expander decomposition on the residual of the previous
rung. Each component stores, per vertex, a bundle of floor(4f/D)+1
independently seeded support samplers over its incident edges, and, per
component, a batch of samplers over the whole component edge set whose
opened samples form a subsampled expander witness. Deletions are replayed
into copies as signed linear updates; every emitted edge is tester-verified
and additionally filtered against the deletion set, so the recovered graph
is a subgraph of G - F unconditionally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .decomposition import CERT_SPECTRAL, DecompositionConfig, decompose
from .errors import (
    BudgetExceededError,
    InfeasibleParamsError,
    InvalidDeletionError,
    OutOfRangeError,
    SamplerExhaustedError,
)
from .graph import Graph, edge_from_id, edge_id
from .ioutil import ByteReader, ByteWriter
from .sketch import L0Sketch, derive_seed, open_bundle

SPANNER_MAGIC = b"FTDP"


def _log2n(n: int) -> float:
    return math.log2(n) if n >= 2 else 1.0


@dataclass(frozen=True)
class SpannerConfig:
    f: int
    seed: int = 0
    c_d: float = 8.0
    c_stop: float = 1.0
    comp_multiplier: float = 1.0
    comp_log_exp: int = 5
    delta: float | None = None
    comp_delta: float | None = None
    phi_target: Fraction | None = None
    peel_multiplier: float = 1.0
    certifier: str = CERT_SPECTRAL
    max_rounds: int = 16

    def __post_init__(self):
        if self.f < 0:
            raise InfeasibleParamsError("fault budget must be >= 0")
        if min(self.c_d, self.c_stop, self.comp_multiplier) <= 0:
            raise InfeasibleParamsError("constants must be positive")

    def ladder_floor(self, n: int) -> int:
        return max(1, math.ceil(self.c_d * math.sqrt(self.f) * _log2n(n)))

    def level_stop(self, n: int, d: int) -> int:
        return max(1, math.ceil(self.c_stop * n * d * _log2n(n) ** 2))

    def vertex_bundle_size(self, d: int) -> int:
        return 4 * self.f // d + 1

    def comp_bundle_size(self, n: int, comp_edges: int, d: int) -> int:
        raw = self.comp_multiplier * comp_edges * _log2n(n) ** self.comp_log_exp / d
        return max(1, math.ceil(raw))

    def resolved_delta(self, n: int) -> float:
        if self.delta is not None:
            return self.delta
        return 1.0 / max(16, n * n)

    def resolved_comp_delta(self) -> float:
        # losing one subsample draw is harmless, so the component bundles
        # run at a coarse failure rate; vertex bundles keep the fine delta
        return 0.25 if self.comp_delta is None else self.comp_delta

    def resolved_phi(self, n: int) -> Fraction:
        if self.phi_target is not None:
            return self.phi_target
        return Fraction(1, max(2, round(_log2n(n))))


@dataclass
class SpannerComponent:
    d_value: int
    round_idx: int
    ordinal: int
    vertices: tuple[int, ...]
    degrees: dict[int, int]
    vertex_bundles: dict[int, list[L0Sketch]]
    comp_bundle: list[L0Sketch]


class SpannerSketch:
    def __init__(self, n, config, components, residual, u):
        self.n = n
        self.config = config
        self.components: list[SpannerComponent] = components  # build order
        self.residual: frozenset[int] = residual
        self.u = u
        self._vmaps = [
            {v: True for v in comp.vertices} for comp in components
        ]

    def locate_edge(self, eid: int):
        """Index of the first build-order component containing both
        endpoints (largest D, then earliest round), or None for residual."""
        a, b = edge_from_id(eid, self.n)
        for i, comp in enumerate(self.components):
            vm = self._vmaps[i]
            if a in vm and b in vm:
                return i
        if eid in self.residual:
            return None
        raise InvalidDeletionError(f"edge {eid} unknown to the sketch")

    # -- byte layout: magic, version u16, n u32, f u64, seed u64,
    #    c_d/c_stop/comp_multiplier f64, comp_log_exp u8, delta f64,
    #    component count u32; per component: d u32, round u16, ordinal u16,
    #    nv u32 + vertices u32[], degrees u32[], per-vertex bundle size u16
    #    + self-describing sampler blocks, comp bundle size u32 + blocks;
    #    residual count u32 + edge ids u32[].
    def to_bytes(self) -> bytes:
        cfg = self.config
        bw = ByteWriter()
        bw.raw(SPANNER_MAGIC)
        bw.u16(1)
        bw.u32(self.n)
        bw.u64(cfg.f)
        bw.u64(cfg.seed & (1 << 64) - 1)
        bw.f64(cfg.c_d)
        bw.f64(cfg.c_stop)
        bw.f64(cfg.comp_multiplier)
        bw.u8(cfg.comp_log_exp)
        bw.f64(cfg.resolved_delta(self.n))
        bw.u32(len(self.components))
        for comp in self.components:
            bw.u32(comp.d_value)
            bw.u16(comp.round_idx)
            bw.u16(comp.ordinal)
            bw.u32(len(comp.vertices))
            for v in comp.vertices:
                bw.u32(v)
            for v in comp.vertices:
                bw.u32(comp.degrees[v])
            for v in comp.vertices:
                bundle = comp.vertex_bundles[v]
                bw.u16(len(bundle))
                for sk in bundle:
                    sk.write(bw)
            bw.u32(len(comp.comp_bundle))
            for sk in comp.comp_bundle:
                sk.write(bw)
        bw.u32(len(self.residual))
        for eid in sorted(self.residual):
            bw.u32(eid)
        return bw.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "SpannerSketch":
        br = ByteReader(data)
        if br.raw(4) != SPANNER_MAGIC or br.u16() != 1:
            raise OutOfRangeError("bad spanner sketch header")
        n = br.u32()
        f = br.u64()
        seed = br.u64()
        cfg = SpannerConfig(
            f=f,
            seed=seed,
            c_d=br.f64(),
            c_stop=br.f64(),
            comp_multiplier=br.f64(),
            comp_log_exp=br.u8(),
            delta=br.f64(),
        )
        comps = []
        for _ in range(br.u32()):
            d = br.u32()
            round_idx = br.u16()
            ordinal = br.u16()
            verts = tuple(br.u32() for _ in range(br.u32()))
            degrees = {v: br.u32() for v in verts}
            bundles = {}
            for v in verts:
                bundles[v] = [L0Sketch.read(br) for _ in range(br.u16())]
            comp_bundle = [L0Sketch.read(br) for _ in range(br.u32())]
            comps.append(
                SpannerComponent(d, round_idx, ordinal, verts, degrees, bundles, comp_bundle)
            )
        residual = frozenset(br.u32() for _ in range(br.u32()))
        u = max(2, n * (n - 1) // 2)
        return cls(n, cfg, comps, residual, u)

    def measured_bits(self) -> int:
        return 8 * len(self.to_bytes())


def build_spanner_sketch(g: Graph, cfg: SpannerConfig) -> SpannerSketch:
    n = g.n
    if cfg.f > n * (n - 1) // 2:
        raise InfeasibleParamsError("fault budget exceeds the edge universe")
    u = max(2, n * (n - 1) // 2)
    delta = cfg.resolved_delta(n)
    floor_d = cfg.ladder_floor(n)
    components: list[SpannerComponent] = []
    residual = set(g.edge_ids)
    d = n // 2
    while d >= floor_d:
        dcfg = DecompositionConfig(
            min_degree=d,
            phi_target=cfg.resolved_phi(n),
            peel_multiplier=cfg.peel_multiplier,
            certifier=cfg.certifier,
        )
        round_idx = 0
        while len(residual) >= cfg.level_stop(n, d) and round_idx < cfg.max_rounds:
            sub = Graph.from_edge_ids(n, residual)
            dec = decompose(sub, dcfg)
            if not dec.components:
                break
            for ordinal, comp_set in enumerate(dec.components):
                verts = tuple(sorted(comp_set))
                degrees = {}
                bundles = {}
                comp_edges = []
                nb = cfg.vertex_bundle_size(d)
                for v in verts:
                    incident = [
                        edge_id(v, w, n) for w in sub.adjacency[v] if w in comp_set
                    ]
                    degrees[v] = len(incident)
                    bundle = [
                        L0Sketch(
                            u,
                            delta,
                            seed=derive_seed(cfg.seed, d, round_idx, ordinal, "v", v, c),
                        )
                        for c in range(nb)
                    ]
                    for sk in bundle:
                        for eid in incident:
                            sk.update(eid)
                    bundles[v] = bundle
                    comp_edges.extend(e for e in incident if edge_from_id(e, n)[0] == v)
                nc = cfg.comp_bundle_size(n, len(comp_edges), d)
                comp_bundle = [
                    L0Sketch(
                        u,
                        cfg.resolved_comp_delta(),
                        seed=derive_seed(cfg.seed, d, round_idx, ordinal, "c", c),
                    )
                    for c in range(nc)
                ]
                for sk in comp_bundle:
                    for eid in comp_edges:
                        sk.update(eid)
                components.append(
                    SpannerComponent(
                        d, round_idx, ordinal, verts, degrees, bundles, comp_bundle
                    )
                )
            residual = set(dec.crossing)
            round_idx += 1
        d //= 2
    return SpannerSketch(n, cfg, components, frozenset(residual), u)


def recover_spanner(sketch: SpannerSketch, deletions) -> Graph:
    """Spanner of G - F from the sketch; subgraph of G - F unconditionally."""
    cfg = sketch.config
    n = sketch.n
    deleted = sorted(set(deletions))
    if len(deleted) > cfg.f:
        raise BudgetExceededError(f"deletion budget f={cfg.f} exceeded")
    residual = set(sketch.residual)
    deg_over: dict[tuple[int, int], int] = {}
    vbundle_over: dict[tuple[int, int], list[L0Sketch]] = {}
    cbundle_over: dict[int, list[L0Sketch]] = {}
    for eid in deleted:
        ci = sketch.locate_edge(eid)
        if ci is None:
            if eid not in residual:
                raise InvalidDeletionError(f"residual edge {eid} already gone")
            residual.discard(eid)
            continue
        comp = sketch.components[ci]
        a, b = edge_from_id(eid, n)
        for x in (a, b):
            cur = deg_over.get((ci, x), comp.degrees[x])
            if cur <= 0:
                raise InvalidDeletionError(
                    f"vertex {x} has no remaining edges in component {ci}"
                )
            deg_over[(ci, x)] = cur - 1
            if (ci, x) not in vbundle_over:
                vbundle_over[(ci, x)] = [sk.copy() for sk in comp.vertex_bundles[x]]
            for sk in vbundle_over[(ci, x)]:
                sk.update(eid, -1)
        if ci not in cbundle_over:
            cbundle_over[ci] = [sk.copy() for sk in comp.comp_bundle]
        for sk in cbundle_over[ci]:
            sk.update(eid, -1)

    deleted_set = set(deleted)
    out: set[int] = set(residual)
    for ci, comp in enumerate(sketch.components):
        d = comp.d_value
        k_v = 4 * cfg.f // d
        degree = lambda v: deg_over.get((ci, v), comp.degrees[v])
        lows = [v for v in comp.vertices if 2 * degree(v) < d]
        comp_bundle = cbundle_over.get(ci, comp.comp_bundle)
        subtracted: set[int] = set()
        mutated = ci in cbundle_over
        for v in lows:
            bundle = vbundle_over.get((ci, v), comp.vertex_bundles[v])
            got, _complete = open_bundle(bundle, limit=max(degree(v), k_v) + 1)
            if degree(v) <= k_v and len(got) != degree(v):
                raise SamplerExhaustedError(
                    f"vertex {v} bundle recovered {len(got)} of {degree(v)} edges",
                    vertex=v,
                    component=ci,
                )
            fresh = [e for e in sorted(got) if e not in subtracted]
            if fresh:
                if not mutated:
                    comp_bundle = [sk.copy() for sk in comp_bundle]
                    mutated = True
                for e in fresh:
                    subtracted.add(e)
                    for sk in comp_bundle:
                        sk.update(e, -1)
            out.update(e for e in got if e not in deleted_set)
        for sk in comp_bundle:
            e = sk.sample()
            if e is not None and e not in deleted_set:
                out.add(e)
    return Graph.from_edge_ids(n, out)
