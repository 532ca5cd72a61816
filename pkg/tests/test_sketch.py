import random
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftdo.errors import NotSparseError, OutOfRangeError
from ftdo.ioutil import element_width
from ftdo.sketch import (
    SYNDROME_HEADER_BITS,
    L0Sketch,
    SyndromeSketch,
    choose_prime,
    derive_seed,
    is_prime,
    open_bundle,
    syndrome_of,
)


def primes_by_trial_division(lo, hi):
    out = []
    for x in range(lo, hi):
        if x >= 2 and all(x % f for f in range(2, int(x**0.5) + 1)):
            out.append(x)
    return out


class TestChoosePrime:
    def test_examples(self):
        # derived: trial division over [10, 20] and [6, 12]
        assert choose_prime(10) == primes_by_trial_division(10, 20)[0] == 11
        assert choose_prime(2) == 2
        assert choose_prime(6) == primes_by_trial_division(6, 12)[0] == 7

    def test_bertrand_window(self):
        for u in range(2, 400):
            q = choose_prime(u)
            assert u <= q <= 2 * u and is_prime(q)

    def test_too_small(self):
        with pytest.raises(OutOfRangeError):
            choose_prime(1)


class TestSyndromeUpdates:
    def test_insert_delete_cancels(self):
        s = SyndromeSketch(10, 2)
        s.update(4, +1)
        s.update(4, -1)
        assert s.is_zero()

    def test_single_update_equals_generator_column(self):
        s = SyndromeSketch(10, 2)
        s.update(3, +1)
        assert s.z == syndrome_of([3], 5, s.q)
        assert s.z == [pow(3, j, s.q) for j in range(5)]

    def test_order_independence(self):
        a = SyndromeSketch(10, 2)
        a.update(2)
        a.update(5)
        b = SyndromeSketch(10, 2)
        b.update(5)
        b.update(2)
        assert a == b

    def test_update_many_matches_scalar(self):
        elems = list(range(0, 60, 3))
        a = SyndromeSketch(64, 4)
        a.update_many(elems)
        b = SyndromeSketch(64, 4)
        for e in elems:
            b.update(e)
        assert a == b

    def test_out_of_range(self):
        with pytest.raises(OutOfRangeError):
            SyndromeSketch(10, 2).update(10)


class TestSyndromeDecode:
    def test_roundtrip_pair(self):
        assert SyndromeSketch.encode(10, 2, [2, 5]).decode() == {2, 5}

    def test_zero_syndrome(self):
        assert SyndromeSketch(10, 2).decode() == frozenset()

    def test_overweight_rejected(self):
        with pytest.raises(NotSparseError):
            SyndromeSketch.encode(10, 2, [1, 2, 3]).decode()

    def test_k0_nonzero_rejected(self):
        with pytest.raises(NotSparseError):
            SyndromeSketch.encode(10, 0, [3]).decode()

    def test_zero_element_supports(self):
        assert SyndromeSketch.encode(12, 3, [0]).decode() == {0}
        assert SyndromeSketch.encode(12, 3, [0, 7, 11]).decode() == {0, 7, 11}

    def test_uniqueness_small_universe(self):
        # Claim-level uniqueness, scaled down; the acceptance suite runs u <= 50.
        for u in (5, 9, 16):
            seen = {}
            for size in (0, 1, 2):
                for s in combinations(range(u), size):
                    key = tuple(SyndromeSketch.encode(u, 2, s).z)
                    assert key not in seen, (u, s, seen[key])
                    seen[key] = s

    def test_deletion_soundness(self):
        rng = random.Random(7)
        for _ in range(50):
            u = rng.randrange(20, 200)
            k = rng.randrange(1, 6)
            support = rng.sample(range(u), min(u, k + rng.randrange(0, 8)))
            s = SyndromeSketch.encode(u, k, support)
            keep = set(rng.sample(support, min(len(support), k)))
            for e in support:
                if e not in keep:
                    s.update(e, -1)
            assert s.decode() == keep

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_random_roundtrip(self, data):
        u = data.draw(st.integers(8, 2000))
        k = data.draw(st.integers(1, 8))
        support = data.draw(st.sets(st.integers(0, u - 1), max_size=k))
        got = SyndromeSketch.encode(u, k, sorted(support)).decode()
        assert got == support


class TestSyndromeSerialization:
    def test_roundtrip(self):
        s = SyndromeSketch.encode(300, 5, [1, 7, 250])
        assert SyndromeSketch.from_bytes(s.to_bytes()) == s

    def test_bit_budget(self):
        for u, k in ((10, 2), (100, 7), (5000, 1)):
            s = SyndromeSketch.encode(u, k, range(min(u, k)))
            w = element_width(s.q)
            assert s.bit_size() <= SYNDROME_HEADER_BITS + (2 * k + 1) * w + 7


class TestL0:
    def test_insert_delete_equals_fresh(self):
        a = L0Sketch(50, 0.25, seed=1)
        a.update(9)
        a.update(9, -1)
        assert a == L0Sketch(50, 0.25, seed=1)

    def test_order_independence(self):
        a = L0Sketch(50, 0.25, seed=3)
        b = L0Sketch(50, 0.25, seed=3)
        for e in (4, 30, 12):
            a.update(e)
        for e in (12, 4, 30):
            b.update(e)
        assert a == b

    def test_merge_is_union(self):
        rng = random.Random(11)
        left = rng.sample(range(400), 20)
        right = [e for e in rng.sample(range(400), 20) if e not in left]
        a = L0Sketch(400, 0.25, seed=5)
        b = L0Sketch(400, 0.25, seed=5)
        c = L0Sketch(400, 0.25, seed=5)
        for e in left:
            a.update(e)
            c.update(e)
        for e in right:
            b.update(e)
            c.update(e)
        assert a.combine(b) == c

    def test_singleton_support(self):
        s = L0Sketch(64, 0.25, seed=9)
        s.update(7)
        assert s.sample() == 7

    def test_empty_support(self):
        s = L0Sketch(64, 0.25, seed=9)
        assert s.sample() is None and s.looks_empty()

    def test_samples_always_in_support(self):
        rng = random.Random(13)
        for trial in range(300):
            u = rng.randrange(10, 3000)
            support = set(rng.sample(range(u), rng.randrange(1, min(25, u))))
            s = L0Sketch(u, 0.25, seed=trial)
            for e in support:
                s.update(e)
            got = s.sample()
            assert got is None or got in support

    def test_seed_determinism(self):
        a = L0Sketch(128, 0.125, seed=77)
        b = L0Sketch(128, 0.125, seed=77)
        for e in (1, 64, 100):
            a.update(e)
            b.update(e)
        assert a.sample() == b.sample()
        assert a.to_bytes() == b.to_bytes()

    def test_serialization_roundtrip(self):
        s = L0Sketch(128, 0.125, seed=4)
        for e in (5, 99):
            s.update(e)
        assert L0Sketch.from_bytes(s.to_bytes()) == s

    def test_bundle_recovers_small_support(self):
        support = {2, 40, 41, 77, 90}
        bundle = [L0Sketch(100, 0.25, seed=derive_seed(1, "copy", i)) for i in range(6)]
        for sk in bundle:
            for e in support:
                sk.update(e)
        got, complete = open_bundle(bundle)
        assert got == support and complete
        # originals untouched
        assert not bundle[0].looks_empty()
