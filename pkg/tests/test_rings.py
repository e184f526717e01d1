import random

import numpy as np
import pytest

from radialproj.errors import UsageError
from radialproj.rings import (RINGS, SQRT2, SQRT3, TAU, QuadInt,
                              canonical_associate, canonical_vec, gcd, gcd_vec,
                              mul_vec, norm_vec, sign_embed_vec)

ALL_RINGS = (SQRT2, TAU, SQRT3)


def rand_elem(ring, rng, lo=-50, hi=50):
    return QuadInt(rng.randint(lo, hi), rng.randint(lo, hi), ring)


class TestArithmetic:
    def test_difference_of_squares_sqrt2(self):
        assert QuadInt(1, 1, SQRT2) * QuadInt(1, -1, SQRT2) == QuadInt(-1, 0, SQRT2)

    def test_tau_minimal_polynomial(self):
        tau = TAU.generator
        assert tau * tau == QuadInt(1, 1, TAU)

    def test_sqrt3_square(self):
        x = QuadInt(1, 1, SQRT3)
        assert x * x == QuadInt(4, 2, SQRT3)

    def test_mixed_rings_rejected(self):
        with pytest.raises(UsageError):
            QuadInt(1, 0, SQRT2) + QuadInt(1, 0, SQRT3)

    def test_norms(self):
        assert QuadInt(3, 1, SQRT2).norm() == 7
        assert QuadInt(1, 1, SQRT2).norm() == -1
        assert QuadInt(1, 1, SQRT3).norm() == -2

    def test_norm_equals_x_times_conj(self):
        rng = random.Random(1)
        for ring in ALL_RINGS:
            for _ in range(200):
                x = rand_elem(ring, rng)
                prod = x * x.conj()
                assert prod == QuadInt(x.norm(), 0, ring)

    def test_conjugation(self):
        assert SQRT2.generator.conj() == QuadInt(0, -1, SQRT2)
        assert TAU.generator.conj() == QuadInt(1, -1, TAU)
        rng = random.Random(2)
        for ring in ALL_RINGS:
            for _ in range(200):
                x = rand_elem(ring, rng)
                assert x.conj().conj() == x

    def test_conj_is_ring_hom(self):
        rng = random.Random(3)
        for ring in ALL_RINGS:
            for _ in range(200):
                x, y = rand_elem(ring, rng), rand_elem(ring, rng)
                assert (x * y).conj() == x.conj() * y.conj()
                assert (x + y).conj() == x.conj() + y.conj()

    def test_units(self):
        assert QuadInt(1, 1, SQRT2).is_unit()      # 1+sqrt2, the silver mean
        assert not QuadInt(2, 0, SQRT2).is_unit()
        assert TAU.generator.is_unit()
        assert QuadInt(2, 1, SQRT3).is_unit()

    def test_embed(self):
        assert QuadInt(1, 1, SQRT2).embed() == pytest.approx(2.41421356, abs=1e-8)
        assert TAU.generator.embed() == pytest.approx(1.61803398, abs=1e-8)
        assert QuadInt(0, 0, SQRT2).embed() == 0.0

    def test_embed_multiplicative(self):
        rng = random.Random(4)
        for ring in ALL_RINGS:
            for _ in range(300):
                x, y = rand_elem(ring, rng, -30, 30), rand_elem(ring, rng, -30, 30)
                lhs = (x * y).embed()
                rhs = x.embed() * y.embed()
                assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)

    def test_exact_sign_matches_float(self):
        rng = random.Random(5)
        for ring in ALL_RINGS:
            for _ in range(500):
                x = rand_elem(ring, rng)
                v = x.embed()
                expected = 0 if x.is_zero() else (1 if v > 0 else -1)
                assert x.sign() == expected


class TestGcd:
    def test_rational_gcd_embeds(self):
        g = gcd(QuadInt(4, 0, SQRT2), QuadInt(6, 0, SQRT2))
        assert g == QuadInt(2, 0, SQRT2)

    def test_sqrt2_divides_two(self):
        g = gcd(SQRT2.generator, QuadInt(2, 0, SQRT2))
        assert g == SQRT2.generator

    def test_gcd_of_equal(self):
        x = QuadInt(1, 1, SQRT3)
        assert gcd(x, x) == canonical_associate(x)

    def test_gcd_zero_zero_rejected(self):
        with pytest.raises(UsageError):
            gcd(SQRT2.zero, SQRT2.zero)

    def test_units_canonicalise_to_one(self):
        for ring in ALL_RINGS:
            u = ring.unit()
            for k in range(4):
                assert canonical_associate(u ** k) == ring.one
                assert canonical_associate(-(u ** k)) == ring.one

    def test_canonical_associate_in_fundamental_interval(self):
        rng = random.Random(6)
        for ring in ALL_RINGS:
            eps = ring.unit().embed()
            for _ in range(300):
                x = rand_elem(ring, rng)
                if x.is_zero():
                    continue
                c = canonical_associate(x)
                assert 1.0 - 1e-12 <= c.embed() < eps * (1 + 1e-12)

    def test_euclidean_descent(self):
        rng = random.Random(7)
        for ring in ALL_RINGS:
            for _ in range(500):
                x, y = rand_elem(ring, rng), rand_elem(ring, rng)
                if y.is_zero():
                    continue
                _, r = divmod(x, y)
                assert abs(r.norm()) < abs(y.norm())


class TestBulkProperties:
    """The heavy randomized suites run vectorised (100k cases per ring)."""

    N = 100_000

    @pytest.mark.parametrize("ring", ALL_RINGS, ids=lambda r: r.name)
    def test_gcd_divides_and_scales(self, ring):
        rng = np.random.default_rng(10)
        a = rng.integers(-60, 61, size=self.N)
        b = rng.integers(-60, 61, size=self.N)
        c = rng.integers(-60, 61, size=self.N)
        d = rng.integers(-60, 61, size=self.N)
        both_zero = (a == 0) & (b == 0) & (c == 0) & (d == 0)
        a[both_zero] = 1
        ga, gb = gcd_vec(ring, a, b, c, d)
        # divisibility: x * conj(g) / norm(g) must be integral
        n = norm_vec(ring, ga, gb)
        ca, cb = ga + ring.p * gb, -gb
        for xa, xb in ((a, b), (c, d)):
            pa, pb = mul_vec(ring, xa, xb, ca, cb)
            assert not np.any(pa % n) and not np.any(pb % n)
        # scaling: gcd(x*s, y*s) is an associate of gcd(x, y)*s
        m = 2000
        sa = rng.integers(-5, 6, size=m)
        sb = rng.integers(-5, 6, size=m)
        zero_s = (sa == 0) & (sb == 0)
        sa[zero_s] = 1
        xa, xb = mul_vec(ring, a[:m], b[:m], sa, sb)
        ya, yb = mul_vec(ring, c[:m], d[:m], sa, sb)
        g2a, g2b = gcd_vec(ring, xa, xb, ya, yb)
        ref_a, ref_b = mul_vec(ring, ga[:m], gb[:m], sa, sb)
        ref_a, ref_b = canonical_vec(ring, ref_a, ref_b)
        assert np.array_equal(g2a, ref_a) and np.array_equal(g2b, ref_b)

    @pytest.mark.parametrize("ring", ALL_RINGS, ids=lambda r: r.name)
    def test_norm_multiplicative(self, ring):
        rng = np.random.default_rng(11)
        a = rng.integers(-200, 201, size=self.N)
        b = rng.integers(-200, 201, size=self.N)
        c = rng.integers(-200, 201, size=self.N)
        d = rng.integers(-200, 201, size=self.N)
        pa, pb = mul_vec(ring, a, b, c, d)
        assert np.array_equal(
            norm_vec(ring, pa, pb), norm_vec(ring, a, b) * norm_vec(ring, c, d)
        )

    @pytest.mark.parametrize("ring", ALL_RINGS, ids=lambda r: r.name)
    def test_vector_gcd_matches_scalar(self, ring):
        rng = np.random.default_rng(12)
        n = 300
        a = rng.integers(-40, 41, size=n)
        b = rng.integers(-40, 41, size=n)
        c = rng.integers(-40, 41, size=n)
        d = rng.integers(-40, 41, size=n)
        bad = (a == 0) & (b == 0) & (c == 0) & (d == 0)
        a[bad] = 1
        ga, gb = gcd_vec(ring, a, b, c, d)
        for i in range(n):
            gs = gcd(QuadInt(int(a[i]), int(b[i]), ring),
                     QuadInt(int(c[i]), int(d[i]), ring))
            assert (gs.a, gs.b) == (int(ga[i]), int(gb[i]))

    @pytest.mark.parametrize("ring", ALL_RINGS, ids=lambda r: r.name)
    def test_vector_sign_matches_exact(self, ring):
        rng = np.random.default_rng(13)
        a = rng.integers(-1000, 1001, size=5000)
        b = rng.integers(-1000, 1001, size=5000)
        s = sign_embed_vec(ring, a, b)
        for i in range(0, 5000, 7):
            assert int(s[i]) == QuadInt(int(a[i]), int(b[i]), ring).sign()
