"""Linear sketches over the edge universe.

Two families live here:

* ``SyndromeSketch`` -- deterministic k-sparse recovery. The state is the
  2k+1 power sums of the support over F_q (a Vandermonde / Reed-Solomon
  parity check evaluated at alpha_e = e), linear under signed updates.
  Any two distinct 0/1 vectors of weight <= k have distinct syndromes, and
  decoding solves the error-locator Hankel system, root-scans the field,
  and re-encodes the candidate to verify.

* ``L0Sketch`` -- randomized support sampler: nested halving subsampling
  levels, each holding a (count, id-sum, fingerprint) one-sparse tester,
  repeated over independent seeded copies. Linear under signed updates;
  all randomness is derived from the explicit seed.
"""

from __future__ import annotations

import hashlib
import math

from .errors import NotSparseError, OutOfRangeError
from .ioutil import (
    ByteReader,
    ByteWriter,
    element_width,
    pack_elements,
    packed_size,
    unpack_elements,
)

try:
    import numpy as _np
except ImportError:  # pragma: no cover
    _np = None

_NUMPY_CUTOVER = 16


def is_prime(x: int) -> bool:
    if x < 2:
        return False
    if x < 4:
        return True
    if x % 2 == 0:
        return False
    f = 3
    while f * f <= x:
        if x % f == 0:
            return False
        f += 2
    return True


def choose_prime(u: int) -> int:
    """Smallest prime >= u (a prime exists below 2u, so the scan is short)."""
    if u < 2:
        raise OutOfRangeError("universe size must be >= 2")
    q = u
    while not is_prime(q):
        q += 1
    return q


def syndrome_of(elements, rows: int, q: int) -> list[int]:
    """Power sums sum_e e^j mod q for j = 0..rows-1 over the given elements."""
    if _np is not None and len(elements) >= _NUMPY_CUTOVER:
        a = _np.asarray(sorted(elements), dtype=_np.uint64)
        qq = _np.uint64(q)
        p = _np.ones(len(a), dtype=_np.uint64)
        z = []
        for _ in range(rows):
            z.append(int(p.sum()) % q)
            p = (p * a) % qq
        return z
    z = [0] * rows
    for e in elements:
        p = 1
        for j in range(rows):
            z[j] = (z[j] + p) % q
            p = (p * e) % q
    return z


def _solve_mod(mat: list[list[int]], rhs: list[int], q: int) -> list[int] | None:
    """Solve mat*x = rhs over F_q by Gaussian elimination; None if singular."""
    t = len(rhs)
    a = [row[:] + [rhs[i]] for i, row in enumerate(mat)]
    for col in range(t):
        piv = next((r for r in range(col, t) if a[r][col] % q), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        inv = pow(a[col][col], -1, q)
        a[col] = [(x * inv) % q for x in a[col]]
        for r in range(t):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [(x - f * y) % q for x, y in zip(a[r], a[col])]
    return [a[r][t] for r in range(t)]


def _poly_roots(coeffs: list[int], u: int, q: int) -> list[int]:
    """Roots of x^t + c_{t-1} x^{t-1} + ... + c_0 among the points 1..u-1."""
    poly = [1] + coeffs[::-1]  # descending powers, monic
    if _np is not None and u >= 4096:
        xs = _np.arange(1, u, dtype=_np.uint64)
        acc = _np.ones(u - 1, dtype=_np.uint64)
        qq = _np.uint64(q)
        for c in poly[1:]:
            acc = (acc * xs + _np.uint64(c)) % qq
        return [int(e) for e in xs[acc == 0]]
    roots = []
    for e in range(1, u):
        acc = 1
        for c in poly[1:]:
            acc = (acc * e + c) % q
        if acc == 0:
            roots.append(e)
    return roots


class SyndromeSketch:
    """Deterministic k-sparse-recovery state over universe [u].

    ``z`` holds the 2k+1 power sums of the net update multiset. When that
    multiset is a 0/1 vector of weight <= k, :meth:`decode` returns exactly
    its support; anything else raises NotSparseError (the re-encode
    verification makes misuse detectable rather than silent).
    """

    __slots__ = ("u", "k", "q", "z")

    def __init__(self, u: int, k: int, q: int | None = None, z: list[int] | None = None):
        if u < 2:
            raise OutOfRangeError("universe size must be >= 2")
        if k < 0:
            raise OutOfRangeError("sparsity bound must be >= 0")
        self.u = u
        self.k = k
        self.q = choose_prime(u) if q is None else q
        self.z = [0] * (2 * k + 1) if z is None else z

    @property
    def rows(self) -> int:
        return 2 * self.k + 1

    @classmethod
    def encode(cls, u: int, k: int, elements, q: int | None = None) -> "SyndromeSketch":
        s = cls(u, k, q=q)
        elems = list(elements)
        for e in elems:
            if not 0 <= e < u:
                raise OutOfRangeError(f"element {e} outside universe [{u}]")
        s.z = syndrome_of(elems, s.rows, s.q)
        return s

    def update(self, e: int, sign: int = 1) -> None:
        if not 0 <= e < self.u:
            raise OutOfRangeError(f"element {e} outside universe [{self.u}]")
        q = self.q
        z = self.z
        p = 1 if sign >= 0 else q - 1
        mult = e % q
        for j in range(self.rows):
            z[j] = (z[j] + p) % q
            p = (p * mult) % q

    def update_many(self, elements, sign: int = 1) -> None:
        delta = syndrome_of(list(elements), self.rows, self.q)
        if sign >= 0:
            self.z = [(a + b) % self.q for a, b in zip(self.z, delta)]
        else:
            self.z = [(a - b) % self.q for a, b in zip(self.z, delta)]

    def is_zero(self) -> bool:
        return not any(self.z)

    def copy(self) -> "SyndromeSketch":
        return SyndromeSketch(self.u, self.k, q=self.q, z=list(self.z))

    def combine(self, other: "SyndromeSketch") -> "SyndromeSketch":
        if (self.u, self.k, self.q) != (other.u, other.k, other.q):
            raise OutOfRangeError("cannot combine sketches with different shapes")
        return SyndromeSketch(
            self.u, self.k, q=self.q, z=[(a + b) % self.q for a, b in zip(self.z, other.z)]
        )

    def __eq__(self, other):
        if not isinstance(other, SyndromeSketch):
            return NotImplemented
        return (self.u, self.k, self.q, self.z) == (other.u, other.k, other.q, other.z)

    def decode(self) -> frozenset[int]:
        """Support of the net vector if it is a 0/1 vector of weight <= k."""
        if not any(self.z):
            return frozenset()
        if self.k == 0:
            raise NotSparseError("nonzero syndrome with k = 0")
        count = self.z[0]  # |S| mod q; exact whenever |S| <= k < q
        for t, with_zero in ((count, False), (count - 1, True)):
            size = t + (1 if with_zero else 0)
            if t < 0 or size > self.k or size == 0:
                continue
            support = self._locate(t)
            if support is None:
                continue
            if with_zero:
                support = support | {0}
            if syndrome_of(sorted(support), self.rows, self.q) == self.z:
                return frozenset(support)
        raise NotSparseError("net vector is not a <=k-sparse 0/1 vector")

    def _locate(self, t: int) -> set[int] | None:
        """Nonzero-point support of size t via the error-locator polynomial."""
        if t == 0:
            return set()
        z, q = self.z, self.q
        mat = [[z[j + m] for m in range(t)] for j in range(1, t + 1)]
        rhs = [(-z[j + t]) % q for j in range(1, t + 1)]
        coeffs = _solve_mod(mat, rhs, q)
        if coeffs is None:
            return None
        roots = _poly_roots(coeffs, self.u, q)
        if len(roots) != t:
            return None
        return set(roots)

    # -- byte layout: u(u64) k(u32) q(u64), then 2k+1 field elements
    #    bit-packed at ceil(log2 q) bits each.
    def write(self, bw: ByteWriter) -> None:
        bw.u64(self.u)
        bw.u32(self.k)
        bw.u64(self.q)
        bw.raw(pack_elements(self.z, element_width(self.q)))

    @classmethod
    def read(cls, br: ByteReader) -> "SyndromeSketch":
        u = br.u64()
        k = br.u32()
        q = br.u64()
        rows = 2 * k + 1
        w = element_width(q)
        z = unpack_elements(br.raw(packed_size(rows, w)), rows, w)
        return cls(u, k, q=q, z=z)

    def to_bytes(self) -> bytes:
        bw = ByteWriter()
        self.write(bw)
        return bw.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "SyndromeSketch":
        return cls.read(ByteReader(data))

    def bit_size(self) -> int:
        return 8 * len(self.to_bytes())


SYNDROME_HEADER_BITS = 8 * (8 + 4 + 8)


FP_PRIME = (1 << 61) - 1

_COPIES_PER_BLOCK = 5  # each 64-byte digest carries 5 x (4-byte depth, 8-byte fp)


def default_copies(delta: float) -> int:
    # +2 over the bare log2(1/delta) repetitions keeps the measured Bottom
    # rate clear of the 2*delta budget (per-copy failure is a constant < 1).
    return max(1, math.ceil(math.log2(1.0 / delta))) + 2


class L0Sketch:
    """Seeded support sampler over universe [u], linear under signed updates.

    Per copy, every element draws a geometric subsampling depth and a
    61-bit fingerprint value from a keyed hash; level states accumulate
    (count, id-sum, fingerprint-sum) so a one-element level is recognized
    and verified exactly.
    """

    __slots__ = ("u", "delta", "seed", "levels", "copies", "_block_keys", "state")

    def __init__(
        self,
        u: int,
        delta: float,
        seed: int,
        copies: int | None = None,
        levels: int | None = None,
        _state=None,
    ):
        if u < 1:
            raise OutOfRangeError("universe size must be >= 1")
        if not 0 < delta < 1:
            raise OutOfRangeError("delta must be in (0, 1)")
        self.u = u
        self.delta = delta
        self.seed = seed
        self.levels = levels if levels is not None else max(1, math.ceil(math.log2(u))) + 1
        self.copies = copies if copies is not None else default_copies(delta)
        nblocks = (self.copies + _COPIES_PER_BLOCK - 1) // _COPIES_PER_BLOCK
        seed_key = (seed & (1 << 64) - 1).to_bytes(8, "little")
        self._block_keys = [
            hashlib.blake2b(
                b.to_bytes(4, "little"), key=seed_key, digest_size=32
            ).digest()
            for b in range(nblocks)
        ]
        if _state is None:
            self.state = [
                [[0, 0, 0] for _ in range(self.levels)] for _ in range(self.copies)
            ]
        else:
            self.state = _state

    def _draws(self, e: int) -> list[tuple[int, int]]:
        """Per copy: (subsampling depth, fingerprint value)."""
        out = []
        data = e.to_bytes(8, "little")
        for key in self._block_keys:
            digest = hashlib.blake2b(data, key=key, digest_size=64).digest()
            for i in range(_COPIES_PER_BLOCK):
                if len(out) >= self.copies:
                    return out
                off = 12 * i
                word = int.from_bytes(digest[off : off + 4], "little")
                depth = min(self.levels - 1, 32 - word.bit_length())
                fp = int.from_bytes(digest[off + 4 : off + 12], "little") % FP_PRIME
                out.append((depth, fp))
        return out

    def update(self, e: int, sign: int = 1) -> None:
        if not 0 <= e < self.u:
            raise OutOfRangeError(f"element {e} outside universe [{self.u}]")
        for c, (depth, fp) in enumerate(self._draws(e)):
            if sign < 0:
                fp = FP_PRIME - fp
            rows = self.state[c]
            for lv in range(depth + 1):
                st = rows[lv]
                st[0] += sign
                st[1] += sign * e
                st[2] = (st[2] + fp) % FP_PRIME

    def _fp_of(self, c: int, e: int) -> int:
        block, i = divmod(c, _COPIES_PER_BLOCK)
        digest = hashlib.blake2b(
            e.to_bytes(8, "little"), key=self._block_keys[block], digest_size=64
        ).digest()
        off = 12 * i
        return int.from_bytes(digest[off + 4 : off + 12], "little") % FP_PRIME

    def _test_one(self, c: int, lv: int) -> int | None:
        """Element if this level's state is consistent with a single element."""
        cnt, ids, fp = self.state[c][lv]
        if cnt == 0:
            return None
        if ids % cnt != 0:
            return None
        e = ids // cnt
        if not 0 <= e < self.u:
            return None
        if (cnt * self._fp_of(c, e)) % FP_PRIME != fp % FP_PRIME:
            return None
        return e

    def sample(self) -> int | None:
        """A support element, or None (Bottom / empty support)."""
        for c in range(self.copies):
            for lv in range(self.levels - 1, -1, -1):
                e = self._test_one(c, lv)
                if e is not None:
                    return e
        return None

    def looks_empty(self) -> bool:
        return all(st == [0, 0, 0] for rows in self.state for st in rows)

    def copy(self) -> "L0Sketch":
        return L0Sketch(
            self.u,
            self.delta,
            self.seed,
            copies=self.copies,
            levels=self.levels,
            _state=[[st[:] for st in rows] for rows in self.state],
        )

    def combine(self, other: "L0Sketch") -> "L0Sketch":
        if (self.u, self.delta, self.seed, self.copies, self.levels) != (
            other.u,
            other.delta,
            other.seed,
            other.copies,
            other.levels,
        ):
            raise OutOfRangeError("cannot combine sketches with different shapes/seeds")
        merged = [
            [
                [a[0] + b[0], a[1] + b[1], (a[2] + b[2]) % FP_PRIME]
                for a, b in zip(ra, rb)
            ]
            for ra, rb in zip(self.state, other.state)
        ]
        return L0Sketch(
            self.u, self.delta, self.seed, copies=self.copies, levels=self.levels, _state=merged
        )

    def __eq__(self, other):
        if not isinstance(other, L0Sketch):
            return NotImplemented
        return (
            self.u == other.u
            and self.delta == other.delta
            and self.seed == other.seed
            and self.copies == other.copies
            and self.levels == other.levels
            and self.state == other.state
        )

    # -- byte layout: u(u64) delta(f64) seed(u64) copies(u16) levels(u16),
    #    then copies*levels records of (count i64, idsum i64, fp u64).
    def write(self, bw: ByteWriter) -> None:
        bw.u64(self.u)
        bw.f64(self.delta)
        bw.u64(self.seed & (1 << 64) - 1)
        bw.u16(self.copies)
        bw.u16(self.levels)
        for rows in self.state:
            for cnt, ids, fp in rows:
                bw.i64(cnt)
                bw.i64(ids)
                bw.u64(fp)

    @classmethod
    def read(cls, br: ByteReader) -> "L0Sketch":
        u = br.u64()
        delta = br.f64()
        seed = br.u64()
        copies = br.u16()
        levels = br.u16()
        state = [
            [[br.i64(), br.i64(), br.u64()] for _ in range(levels)] for _ in range(copies)
        ]
        return cls(u, delta, seed, copies=copies, levels=levels, _state=state)

    def to_bytes(self) -> bytes:
        bw = ByteWriter()
        self.write(bw)
        return bw.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "L0Sketch":
        return cls.read(ByteReader(data))

    def bit_size(self) -> int:
        return 8 * len(self.to_bytes())


def open_bundle(sketches: list[L0Sketch], limit: int | None = None) -> tuple[set[int], bool]:
    """Peel a bundle of same-support sketches; (recovered, fully-drained flag).

    Recovered elements are subtracted from every working copy so deeper
    elements surface on later passes. The caller's sketches are untouched.
    """
    if not sketches:
        return set(), True
    work = [s.copy() for s in sketches]
    got: set[int] = set()
    progress = True
    while progress and (limit is None or len(got) < limit):
        progress = False
        for w in work:
            for c in range(w.copies):
                for lv in range(w.levels - 1, -1, -1):
                    e = w._test_one(c, lv)
                    if e is not None and e not in got:
                        got.add(e)
                        for w2 in work:
                            w2.update(e, -1)
                        progress = True
                        if limit is not None and len(got) >= limit:
                            return got, all(x.looks_empty() for x in work)
    return got, all(w.looks_empty() for w in work)


def derive_seed(master: int, *parts) -> int:
    """Deterministic 64-bit sub-seed from the master seed and a label path."""
    h = hashlib.blake2b(key=(master & (1 << 64) - 1).to_bytes(8, "little"), digest_size=8)
    for p in parts:
        if isinstance(p, str):
            h.update(b"s" + p.encode("utf-8") + b"\x00")
        else:
            h.update(b"i" + int(p).to_bytes(8, "little", signed=True))
    return int.from_bytes(h.digest(), "little")
