"""Degree-preserving expander decomposition and deletion-robustness reporting.

The partitioner peels low-degree vertices, then recursively splits the rest
along refuting cuts until every remaining part carries an expansion
certificate: exact cut enumeration for parts of <= 20 vertices, otherwise a
normalized-Laplacian bound (phi >= lambda2/2) with sweep-cut refutation.
Vertices removed by a cut leave their old degree behind as a virtual
self-loop count, so all conductance denominators reference the degrees the
vertices had when the decomposition started.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    EmptyGraphError,
    InfeasibleParamsError,
    InvalidDeletionError,
)
from .graph import (
    Graph,
    diameter_of_masks,
    edge_id,
    masks_without_edges,
)
from .ioutil import ByteReader, ByteWriter

CERT_BRUTE_FORCE = "brute-force"
CERT_SPECTRAL = "spectral"

ACCEPTED = "accepted"
REFUTED = "refuted"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DecompositionConfig:
    min_degree: int
    phi_target: Fraction
    peel_multiplier: float = 1.0
    certifier: str = CERT_SPECTRAL

    def __post_init__(self):
        if self.min_degree < 1:
            raise InfeasibleParamsError("min_degree must be >= 1")
        if not 0 < self.phi_target <= Fraction(1, 2):
            raise InfeasibleParamsError("phi_target must be in (0, 1/2]")
        if self.certifier not in (CERT_BRUTE_FORCE, CERT_SPECTRAL):
            raise InfeasibleParamsError(f"unknown certifier {self.certifier!r}")

    def peel_threshold(self) -> int:
        return max(self.min_degree, math.ceil(self.min_degree * self.peel_multiplier))


@dataclass(frozen=True)
class Certificate:
    kind: str
    phi_bound: float
    phi_exact: Fraction | None = None


@dataclass(frozen=True)
class CertifyOutcome:
    status: str
    cut: frozenset[int] | None = None
    cut_phi: Fraction | None = None
    certificate: Certificate | None = None

    @property
    def accepted(self) -> bool:
        return self.status == ACCEPTED


@dataclass
class Decomposition:
    n: int
    min_degree: int
    components: list[frozenset[int]]
    crossing: frozenset[int]
    certificates: list[Certificate]

    def component_of(self, v: int) -> int | None:
        for i, comp in enumerate(self.components):
            if v in comp:
                return i
        return None

    def component_edge_count(self, g: Graph) -> int:
        total = 0
        for comp in self.components:
            for v in comp:
                for w in g.adjacency[v]:
                    if v < w and w in comp:
                        total += 1
        return total

    # -- byte layout: n(u32) D(u32) count(u32); per component len(u32) then
    #    sorted vertex u32s; crossing count(u32) then edge-id u64s.
    def to_bytes(self) -> bytes:
        bw = ByteWriter()
        bw.u32(self.n)
        bw.u32(self.min_degree)
        bw.u32(len(self.components))
        for comp in self.components:
            bw.u32(len(comp))
            for v in sorted(comp):
                bw.u32(v)
        bw.u32(len(self.crossing))
        for eid in sorted(self.crossing):
            bw.u64(eid)
        return bw.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Decomposition":
        br = ByteReader(data)
        n = br.u32()
        d = br.u32()
        comps = []
        for _ in range(br.u32()):
            size = br.u32()
            comps.append(frozenset(br.u32() for _ in range(size)))
        crossing = frozenset(br.u64() for _ in range(br.u32()))
        return cls(n, d, comps, crossing, [])

    def dump(self) -> str:
        lines = [" ".join(str(v) for v in sorted(comp)) for comp in self.components]
        lines.append("# crossing " + " ".join(str(e) for e in sorted(self.crossing)))
        return "\n".join(lines) + "\n"


def peel(g: Graph, d: int) -> tuple[frozenset[int], int]:
    """Maximal induced subgraph of min degree >= d; (kept set, edges removed)."""
    if d < 1:
        raise InfeasibleParamsError("degree threshold must be >= 1")
    neigh = [set(ns) for ns in g.adjacency]
    kept, removed = _peel_part(neigh, set(range(g.n)), d)
    return frozenset(kept), len(removed)


def _peel_part(neigh: list[set[int]], part: set[int], d: int):
    """Peel within one part, mutating neigh; edges removed are returned.

    Assumes neigh only holds edges internal to the part (the decomposition
    maintains that invariant by cutting cross edges on every split).
    """
    kept = set(part)
    removed: list[tuple[int, int]] = []
    queue = [v for v in part if len(neigh[v]) < d]
    while queue:
        v = queue.pop()
        if v not in kept:
            continue
        kept.discard(v)
        for w in list(neigh[v]):
            removed.append((v, w))
            neigh[w].discard(v)
            if w in kept and len(neigh[w]) < d:
                queue.append(w)
        neigh[v].clear()
    return kept, removed


def _parts_of(neigh: list[set[int]], part: set[int]) -> list[set[int]]:
    """Connected components within a part (neigh holds only internal edges)."""
    left = set(part)
    out = []
    while left:
        start = min(left)
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in neigh[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        out.append(seen)
        left -= seen
    return out


def _certify_part(
    neigh: list[set[int]],
    part: set[int],
    volumes: dict[int, int],
    phi_target: Fraction,
    certifier: str,
) -> CertifyOutcome:
    verts = sorted(part)
    nv = len(verts)
    m2 = sum(len(neigh[v]) for v in verts)
    if m2 == 0 or nv < 2:
        raise EmptyGraphError("cannot certify an edgeless part")
    vol_total = sum(volumes[v] for v in verts)

    if certifier == CERT_BRUTE_FORCE:
        if nv > 20:
            raise InfeasibleParamsError("brute-force certifier limited to 20 vertices")
        masks = {v: 0 for v in verts}
        idx = {v: i for i, v in enumerate(verts)}
        for v in verts:
            for w in neigh[v]:
                masks[v] |= 1 << idx[w]
        best_phi = None
        best_bits = 0
        for bits in range(1, 1 << (nv - 1)):
            delta = 0
            vol_s = 0
            m_ = bits
            while m_:
                b = m_ & -m_
                m_ ^= b
                v = verts[b.bit_length() - 1]
                delta += (masks[v] & ~bits).bit_count()
                vol_s += volumes[v]
            small = min(vol_s, vol_total - vol_s)
            phi = Fraction(delta, small) if small else Fraction(0)
            if best_phi is None or phi < best_phi:
                best_phi, best_bits = phi, bits
        if best_phi >= phi_target:
            cert = Certificate(CERT_BRUTE_FORCE, float(best_phi), phi_exact=best_phi)
            return CertifyOutcome(ACCEPTED, certificate=cert)
        cut = frozenset(verts[i] for i in range(nv) if best_bits >> i & 1)
        return CertifyOutcome(REFUTED, cut=cut, cut_phi=best_phi)

    # spectral path
    zero_vol = [v for v in verts if volumes[v] == 0]
    if zero_vol:
        cut = frozenset(zero_vol) if len(zero_vol) < nv else frozenset(zero_vol[:-1])
        return CertifyOutcome(REFUTED, cut=cut, cut_phi=Fraction(0))
    idx = {v: i for i, v in enumerate(verts)}
    a = np.zeros((nv, nv))
    for v in verts:
        for w in neigh[v]:
            a[idx[v], idx[w]] = 1.0
    vol = np.array([float(volumes[v]) for v in verts])
    deg_real = np.array([float(len(neigh[v])) for v in verts])
    a[np.arange(nv), np.arange(nv)] += vol - deg_real  # virtual self-loops
    inv_sqrt = 1.0 / np.sqrt(vol)
    lap = np.eye(nv) - (a * inv_sqrt).T * inv_sqrt
    if nv >= 128:
        from scipy.linalg import eigh as _scipy_eigh

        vals, vecs = _scipy_eigh(lap, subset_by_index=(0, 1))
    else:
        vals, vecs = np.linalg.eigh(lap)
    lam2 = max(0.0, float(vals[1]))
    fiedler = vecs[:, 1]
    order = sorted(verts, key=lambda v: (fiedler[idx[v]], v))

    best_phi = None
    best_k = 0
    in_s: set[int] = set()
    delta = 0
    vol_s = 0
    for k, v in enumerate(order[:-1]):
        delta += len(neigh[v]) - 2 * sum(1 for w in neigh[v] if w in in_s)
        in_s.add(v)
        vol_s += volumes[v]
        small = min(vol_s, vol_total - vol_s)
        phi = Fraction(delta, small) if small else Fraction(0)
        if best_phi is None or phi < best_phi:
            best_phi, best_k = phi, k + 1
    cut = frozenset(order[:best_k])
    if best_phi < phi_target:
        return CertifyOutcome(REFUTED, cut=cut, cut_phi=best_phi)
    if lam2 / 2.0 >= float(phi_target):
        cert = Certificate(CERT_SPECTRAL, lam2 / 2.0)
        return CertifyOutcome(ACCEPTED, certificate=cert)
    return CertifyOutcome(INCONCLUSIVE, cut=cut, cut_phi=best_phi)


def certify_expansion(
    g: Graph, phi_target: Fraction, certifier: str = CERT_SPECTRAL
) -> CertifyOutcome:
    """Certificate that phi(g) >= phi_target, or a refuting/sweep cut."""
    if g.m == 0 or g.n < 2:
        raise EmptyGraphError("cannot certify an empty graph")
    neigh = [set(ns) for ns in g.adjacency]
    volumes = {v: g.degrees[v] for v in range(g.n)}
    return _certify_part(neigh, set(range(g.n)), volumes, phi_target, certifier)


def decompose(g: Graph, cfg: DecompositionConfig) -> Decomposition:
    """Partition g into certified-expansion parts of min degree >= D.

    Every input edge lands in exactly one component's induced subgraph or in
    the crossing set. Deterministic given (g, cfg).
    """
    if g.m == 0:
        return Decomposition(g.n, cfg.min_degree, [], frozenset(), [])
    neigh = [set(ns) for ns in g.adjacency]
    crossing_pairs: list[tuple[int, int]] = []
    d = cfg.min_degree

    kept, removed = _peel_part(neigh, set(range(g.n)), cfg.peel_threshold())
    crossing_pairs.extend(removed)
    volumes = {v: len(neigh[v]) for v in kept}

    components: list[frozenset[int]] = []
    certificates: list[Certificate] = []
    stack = sorted(_parts_of(neigh, kept), key=min, reverse=True)
    while stack:
        part = stack.pop()
        part, removed = _peel_part(neigh, part, d)
        crossing_pairs.extend(removed)
        if len(part) < 2:
            continue
        pieces = _parts_of(neigh, part)
        if len(pieces) > 1:
            stack.extend(sorted(pieces, key=min, reverse=True))
            continue
        outcome = _certify_part(neigh, part, volumes, cfg.phi_target, cfg.certifier)
        if outcome.accepted:
            components.append(frozenset(part))
            certificates.append(outcome.certificate)
            continue
        cut = set(outcome.cut)
        rest = part - cut
        for v in cut:
            for w in list(neigh[v]):
                if w in rest:
                    crossing_pairs.append((v, w))
                    neigh[v].discard(w)
                    neigh[w].discard(v)
        stack.append(rest)
        stack.append(cut)

    crossing = frozenset(edge_id(u, v, g.n) for u, v in crossing_pairs)
    return Decomposition(g.n, d, components, crossing, certificates)


@dataclass
class RobustnessReport:
    min_degree: int
    deletions: int
    v_good: frozenset[int]
    v_bad: frozenset[int]
    good_diameter: object  # int | Unreachable
    high_degree_vertices: frozenset[int]
    max_high_degree_distance: object  # int | Unreachable
    bad_bound: int  # floor(4f/D)


def robustness_report(h: Graph, deletions, min_degree: int) -> RobustnessReport:
    """Post-deletion degree split of h and the distances the split promises.

    Good vertices keep degree >= D/2 in h - F; the report measures the
    diameter of the induced good subgraph and the max distance (in all of
    h - F) between vertices of degree >= 4f/D + 1.
    """
    f_set = frozenset(deletions)
    if not f_set <= h.edge_ids:
        raise InvalidDeletionError("deletion set contains non-edges")
    f = len(f_set)
    d = min_degree
    masks = masks_without_edges(h, f_set)
    deg_after = [masks[v].bit_count() for v in range(h.n)]
    v_good = frozenset(v for v in range(h.n) if 2 * deg_after[v] >= d)
    v_bad = frozenset(range(h.n)) - v_good
    good_mask = 0
    for v in v_good:
        good_mask |= 1 << v
    induced = [masks[v] & good_mask if v in v_good else 0 for v in range(h.n)]
    good_diameter = diameter_of_masks(induced, v_good, h.n)
    # degree >= 4f/D + 1  <=>  D*(deg-1) >= 4f, exact in integers
    high = frozenset(v for v in range(h.n) if d * (deg_after[v] - 1) >= 4 * f)
    max_high = diameter_of_masks(masks, high, h.n)
    return RobustnessReport(
        min_degree=d,
        deletions=f,
        v_good=v_good,
        v_bad=v_bad,
        good_diameter=good_diameter,
        high_degree_vertices=high,
        max_high_degree_distance=max_high,
        bad_bound=(4 * f) // d,
    )
