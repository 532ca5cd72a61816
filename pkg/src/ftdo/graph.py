"""Simple undirected graphs with canonical edge ids, exact BFS, and exact conductance.

Vertices are 0..n-1. An edge {u, v} with u < v is identified by the
lexicographic index ``u*(2n-u-1)/2 + (v-u-1)`` into the universe of all
C(n, 2) vertex pairs; every sketch in this package lives over that
universe. Graphs are immutable after construction and safe to share.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Iterator

from .errors import (
    DegenerateCutError,
    DuplicateEdgeError,
    EmptyGraphError,
    InfeasibleParamsError,
    MalformedLineError,
    OutOfRangeError,
    SelfLoopError,
)


class Unreachable:
    """Marker for unreachable distances; compares greater than every int.

    Kept as a singleton rather than an integer sentinel so that stretch
    multiplication cannot overflow into a bogus finite value.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNREACHABLE"

    def __eq__(self, other):
        return isinstance(other, Unreachable)

    def __hash__(self):
        return hash("ftdo.UNREACHABLE")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return isinstance(other, Unreachable)

    def __gt__(self, other):
        return not isinstance(other, Unreachable)

    def __ge__(self, other):
        return True

    def __mul__(self, other):
        return self

    __rmul__ = __mul__

    def __add__(self, other):
        return self

    __radd__ = __add__


UNREACHABLE = Unreachable()

Distance = int | Unreachable


def edge_id(u: int, v: int, n: int) -> int:
    """Canonical index of edge {u, v} in the lexicographic pair order."""
    if u == v:
        raise SelfLoopError(f"self-loop ({u},{v})")
    if not (0 <= u < n and 0 <= v < n):
        raise OutOfRangeError(f"endpoint out of range for n={n}: ({u},{v})")
    if u > v:
        u, v = v, u
    return u * (2 * n - u - 1) // 2 + (v - u - 1)


def edge_from_id(eid: int, n: int) -> tuple[int, int]:
    """Inverse of :func:`edge_id`."""
    total = n * (n - 1) // 2
    if not (0 <= eid < total):
        raise OutOfRangeError(f"edge id {eid} out of range for n={n}")
    # largest u with offset(u) <= eid, offset(u) = u*(2n-u-1)/2
    lo, hi = 0, n - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid * (2 * n - mid - 1) // 2 <= eid:
            lo = mid
        else:
            hi = mid - 1
    u = lo
    v = eid - u * (2 * n - u - 1) // 2 + u + 1
    return u, v


class Graph:
    """Immutable simple undirected graph.

    ``weights`` (edge id -> positive int) is carried only for the weighted
    oracle's bucketing layer; all distances in this module are hop counts.
    ``labels`` maps local vertex ids back to the ids of a parent graph when
    the instance came out of :func:`induced_subgraph`.
    """

    def __init__(
        self,
        n: int,
        edges: Iterable[tuple[int, int]] = (),
        weights: dict[int, int] | None = None,
        labels: tuple[int, ...] | None = None,
    ):
        if n < 0:
            raise OutOfRangeError("negative vertex count")
        self.n = n
        adj: list[list[int]] = [[] for _ in range(n)]
        ids: set[int] = set()
        for u, v in edges:
            eid = edge_id(u, v, n)
            if eid in ids:
                raise DuplicateEdgeError(f"duplicate edge ({u},{v})")
            ids.add(eid)
            adj[u].append(v)
            adj[v].append(u)
        self.edge_ids: frozenset[int] = frozenset(ids)
        self.adjacency: tuple[tuple[int, ...], ...] = tuple(
            tuple(sorted(ns)) for ns in adj
        )
        self.degrees: tuple[int, ...] = tuple(len(ns) for ns in self.adjacency)
        self.weights = dict(weights) if weights else None
        self.labels = labels
        self._masks: tuple[int, ...] | None = None

    @classmethod
    def from_edge_ids(cls, n: int, eids: Iterable[int], **kw) -> "Graph":
        return cls(n, (edge_from_id(e, n) for e in eids), **kw)

    @property
    def m(self) -> int:
        return len(self.edge_ids)

    def degree(self, v: int) -> int:
        if not 0 <= v < self.n:
            raise OutOfRangeError(f"vertex {v} out of range")
        return self.degrees[v]

    def neighbors(self, v: int) -> tuple[int, ...]:
        if not 0 <= v < self.n:
            raise OutOfRangeError(f"vertex {v} out of range")
        return self.adjacency[v]

    def has_edge(self, u: int, v: int) -> bool:
        return edge_id(u, v, self.n) in self.edge_ids

    def edge_pairs(self) -> Iterator[tuple[int, int]]:
        for eid in sorted(self.edge_ids):
            yield edge_from_id(eid, self.n)

    def adjacency_masks(self) -> tuple[int, ...]:
        """Per-vertex neighbor bitmasks (built lazily, cached)."""
        if self._masks is None:
            masks = [0] * self.n
            for u in range(self.n):
                acc = 0
                for v in self.adjacency[u]:
                    acc |= 1 << v
                masks[u] = acc
            self._masks = tuple(masks)
        return self._masks

    def effective_labels(self) -> tuple[int, ...]:
        return self.labels if self.labels is not None else tuple(range(self.n))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.edge_ids == other.edge_ids
            and self.effective_labels() == other.effective_labels()
            and self.weights == other.weights
        )

    def __hash__(self):
        return hash((self.n, self.edge_ids, self.effective_labels()))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def parse_edge_list(text: str | bytes) -> Graph:
    """Parse the package's edge-list text format.

    Line 1 is ``n m``; then m lines ``u v`` or ``u v w`` (w a positive
    integer weight); ``#``-prefixed comment lines are ignored.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = [
        ln.strip()
        for ln in text.splitlines()
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not lines:
        raise MalformedLineError("empty input")
    head = lines[0].split()
    if len(head) != 2:
        raise MalformedLineError(f"bad header: {lines[0]!r}")
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError as exc:
        raise MalformedLineError(f"bad header: {lines[0]!r}") from exc
    if n < 0 or m < 0:
        raise MalformedLineError("negative n or m")
    if len(lines) - 1 != m:
        raise MalformedLineError(f"declared {m} edges, found {len(lines) - 1}")
    edges: list[tuple[int, int]] = []
    weights: dict[int, int] = {}
    any_weight = False
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) not in (2, 3):
            raise MalformedLineError(f"bad edge line: {ln!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = int(parts[2]) if len(parts) == 3 else 1
        except ValueError as exc:
            raise MalformedLineError(f"bad edge line: {ln!r}") from exc
        if len(parts) == 3:
            any_weight = True
            if w < 1:
                raise MalformedLineError(f"non-positive weight: {ln!r}")
        edges.append((u, v))
        if u != v and 0 <= u < n and 0 <= v < n:
            weights[edge_id(u, v, n)] = w
    g = Graph(n, edges, weights=weights if any_weight else None)
    return g


def format_edge_list(g: Graph) -> str:
    """Inverse of :func:`parse_edge_list` (weights included when present)."""
    out = [f"{g.n} {g.m}"]
    for u, v in g.edge_pairs():
        if g.weights is not None:
            out.append(f"{u} {v} {g.weights[edge_id(u, v, g.n)]}")
        else:
            out.append(f"{u} {v}")
    return "\n".join(out) + "\n"


def bfs_raw(masks, source: int, n: int, cutoff: int | None = None) -> list[int]:
    """Bitset BFS over neighbor masks; -1 marks unreachable."""
    dist = [-1] * n
    dist[source] = 0
    visited = 1 << source
    frontier = 1 << source
    d = 0
    while frontier and (cutoff is None or d < cutoff):
        nxt = 0
        f = frontier
        while f:
            b = f & -f
            f ^= b
            nxt |= masks[b.bit_length() - 1]
        nxt &= ~visited
        visited |= nxt
        d += 1
        f = nxt
        while f:
            b = f & -f
            f ^= b
            dist[b.bit_length() - 1] = d
        frontier = nxt
    return dist


def bfs_distances(g: Graph, source: int) -> list:
    """Exact hop distances from ``source``; UNREACHABLE where disconnected."""
    if not 0 <= source < g.n:
        raise OutOfRangeError(f"source {source} out of range")
    raw = bfs_raw(g.adjacency_masks(), source, g.n)
    return [UNREACHABLE if d < 0 else d for d in raw]


def masks_without_edges(g: Graph, removed: Iterable[int]) -> list[int]:
    """Adjacency masks of g with the given edge ids removed."""
    masks = list(g.adjacency_masks())
    for eid in removed:
        u, v = edge_from_id(eid, g.n)
        masks[u] &= ~(1 << v)
        masks[v] &= ~(1 << u)
    return masks


def diameter_of_masks(masks, vertices: Iterable[int], n: int):
    """Max pairwise distance (within the full graph) among ``vertices``."""
    vs = list(vertices)
    if len(vs) <= 1:
        return 0
    best = 0
    for s in vs:
        raw = bfs_raw(masks, s, n)
        for t in vs:
            d = raw[t]
            if d < 0:
                return UNREACHABLE
            if d > best:
                best = d
    return best


def connected_components(masks, vertices: Iterable[int]) -> list[frozenset[int]]:
    """Connected components of the induced subgraph on ``vertices``."""
    alive = 0
    for v in vertices:
        alive |= 1 << v
    comps = []
    while alive:
        b = alive & -alive
        seen = b
        frontier = b
        while frontier:
            nxt = 0
            f = frontier
            while f:
                lb = f & -f
                f ^= lb
                nxt |= masks[lb.bit_length() - 1]
            nxt &= alive & ~seen
            seen |= nxt
            frontier = nxt
        comps.append(frozenset(i for i in range(seen.bit_length()) if seen >> i & 1))
        alive &= ~seen
    return comps


def induced_subgraph(g: Graph, vs: Iterable[int]) -> Graph:
    """Induced subgraph on ``vs`` with compacted ids; original ids in labels."""
    vset = sorted(set(vs))
    for v in vset:
        if not 0 <= v < g.n:
            raise OutOfRangeError(f"vertex {v} out of range")
    pos = {v: i for i, v in enumerate(vset)}
    edges = []
    for u in vset:
        for w in g.adjacency[u]:
            if u < w and w in pos:
                edges.append((pos[u], pos[w]))
    parent_labels = g.effective_labels()
    return Graph(len(vset), edges, labels=tuple(parent_labels[v] for v in vset))


def cut_size(g: Graph, s_mask: int) -> int:
    """Number of edges crossing the cut given by bitmask ``s_mask``."""
    masks = g.adjacency_masks()
    total = 0
    m = s_mask
    while m:
        b = m & -m
        m ^= b
        total += (masks[b.bit_length() - 1] & ~s_mask).bit_count()
    return total


def conductance(g: Graph, s: Iterable[int], lopsided: bool = False):
    """Exact conductance of the cut ``s``.

    Plain form returns a Fraction. The lopsided form carries a log factor in
    the denominator and is returned as a float (reporting only; base-2 log).
    """
    if g.m == 0:
        raise EmptyGraphError("conductance of an empty graph")
    s_set = set(s)
    if not s_set or len(s_set) >= g.n:
        raise DegenerateCutError("cut must be a nonempty proper vertex subset")
    s_mask = 0
    for v in s_set:
        if not 0 <= v < g.n:
            raise OutOfRangeError(f"vertex {v} out of range")
        s_mask |= 1 << v
    delta = cut_size(g, s_mask)
    vol_s = sum(g.degrees[v] for v in s_set)
    vol_rest = 2 * g.m - vol_s
    small = min(vol_s, vol_rest)
    if small == 0:
        # one side is all isolated vertices: boundary is empty too
        return 0.0 if lopsided else Fraction(0)
    phi = Fraction(delta, small)
    if not lopsided:
        return phi
    ratio = Fraction(2 * g.m, small)
    return float(phi) / math.log2(float(ratio)) if ratio > 1 else float(phi)


def brute_force_expansion(g: Graph) -> tuple[Fraction, frozenset[int]]:
    """Exact minimum conductance over all 2^(n-1)-1 cuts (n <= 20 only)."""
    if g.n > 20:
        raise InfeasibleParamsError("brute-force expansion limited to n <= 20")
    if g.m == 0 or g.n < 2:
        raise EmptyGraphError("expansion of an empty graph")
    masks = g.adjacency_masks()
    degs = g.degrees
    two_m = 2 * g.m
    best: Fraction | None = None
    best_mask = 0
    # vertex n-1 fixed outside S so each split is enumerated once
    for bits in range(1, 1 << (g.n - 1)):
        delta = 0
        vol = 0
        m_ = bits
        while m_:
            b = m_ & -m_
            m_ ^= b
            v = b.bit_length() - 1
            delta += (masks[v] & ~bits).bit_count()
            vol += degs[v]
        small = min(vol, two_m - vol)
        if small == 0:
            phi = Fraction(0)
        else:
            phi = Fraction(delta, small)
        if best is None or phi < best:
            best = phi
            best_mask = bits
    cut = frozenset(i for i in range(g.n) if best_mask >> i & 1)
    return best, cut


def graph_diameter(g: Graph):
    """Diameter of g; UNREACHABLE when disconnected; 0 for n <= 1."""
    if g.n <= 1:
        return 0
    return diameter_of_masks(g.adjacency_masks(), range(g.n), g.n)
