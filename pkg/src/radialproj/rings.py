"""Exact arithmetic in three real quadratic integer rings.

Z[sqrt(2)], Z[tau] (tau = (1+sqrt(5))/2, the golden mean) and Z[sqrt(3)]
share one description: each is Z[omega] for omega satisfying
omega^2 = P*omega + Q with integer P, Q.  Elements are stored on the basis
{1, omega} with Python integers, so every operation is exact and cannot
overflow.  All three rings are norm-Euclidean, which gives a terminating
division-with-remainder and hence a gcd.

The gcd is only defined up to a unit; `canonical_associate` fixes the
representative whose real embedding lies in [1, eps) for the fundamental
unit eps.  Sign tests against the real embedding are done with exact
integer arithmetic (never floats), so canonicalisation is deterministic.

A small set of vectorised twins (numpy, int64) mirrors the scalar
operations for bulk work on hundreds of thousands of elements; they check
coefficient bounds and raise OverflowError instead of wrapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError

__all__ = [
    "Ring",
    "SQRT2",
    "TAU",
    "SQRT3",
    "RINGS",
    "QuadInt",
    "gcd",
    "canonical_associate",
    "norm_vec",
    "mul_vec",
    "conj_vec",
    "sign_embed_vec",
    "gcd_vec",
    "canonical_vec",
    "divide_exact_vec",
]

# Coefficients in the vectorised int64 paths must stay below this bound so
# that products and norms fit into int64 with headroom.
_VEC_COEFF_BOUND = 1 << 29


@dataclass(frozen=True)
class Ring:
    """One of the three real quadratic rings, omega^2 = P*omega + Q."""

    name: str
    p: int
    q: int
    omega: float
    # Sign tests write a + b*omega as (s + t*sqrt(d)) / den with integers s, t.
    sqrt_d: int
    fund_unit: tuple[int, int]
    fund_unit_inv: tuple[int, int]

    def __repr__(self) -> str:
        return f"Ring({self.name})"

    @property
    def one(self) -> "QuadInt":
        return QuadInt(1, 0, self)

    @property
    def zero(self) -> "QuadInt":
        return QuadInt(0, 0, self)

    @property
    def generator(self) -> "QuadInt":
        return QuadInt(0, 1, self)

    def unit(self) -> "QuadInt":
        return QuadInt(*self.fund_unit, self)

    def unit_inv(self) -> "QuadInt":
        return QuadInt(*self.fund_unit_inv, self)

    def _sqrt_form(self, a: int, b: int) -> tuple[int, int]:
        """Return (s, t) with a + b*omega = (s + t*sqrt(d)) / den, den > 0."""
        if self.p == 0:
            return a, b
        # tau = (1 + sqrt(5)) / 2
        return 2 * a + b, b


SQRT2 = Ring("sqrt2", 0, 2, math.sqrt(2.0), 2, (1, 1), (-1, 1))
TAU = Ring("tau", 1, 1, (1.0 + math.sqrt(5.0)) / 2.0, 5, (0, 1), (-1, 1))
SQRT3 = Ring("sqrt3", 0, 3, math.sqrt(3.0), 3, (2, 1), (2, -1))

RINGS = {"sqrt2": SQRT2, "tau": TAU, "sqrt3": SQRT3}


def _sign_sqrt_form(s: int, t: int, d: int) -> int:
    """Exact sign of s + t*sqrt(d) for a non-square d > 1."""
    if t == 0:
        return (s > 0) - (s < 0)
    if s == 0:
        return (t > 0) - (t < 0)
    if (s > 0) == (t > 0):
        return 1 if s > 0 else -1
    # Opposite signs: compare magnitudes via squares.
    lhs = s * s
    rhs = d * t * t
    if lhs == rhs:  # impossible for non-square d, but keep total
        return 0
    if s > 0:
        return 1 if lhs > rhs else -1
    return -1 if lhs > rhs else 1


def _round_half_away(p: int, k: int) -> int:
    """round(p / k) with ties away from zero, exact in integers."""
    if k == 0:
        raise ZeroDivisionError("division by zero ring element")
    sign = 1 if (p >= 0) == (k > 0) else -1
    q = (2 * abs(p) + abs(k)) // (2 * abs(k))
    return sign * q


@dataclass(frozen=True)
class QuadInt:
    """Exact element a + b*omega of a real quadratic ring."""

    a: int
    b: int
    ring: Ring

    def _coerce(self, other) -> "QuadInt":
        if isinstance(other, QuadInt):
            if other.ring is not self.ring:
                raise UsageError(
                    f"mixed rings: {self.ring.name} and {other.ring.name}"
                )
            return other
        if isinstance(other, int):
            return QuadInt(other, 0, self.ring)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadInt(self.a + o.a, self.b + o.b, self.ring)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadInt(self.a - o.a, self.b - o.b, self.ring)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return QuadInt(-self.a, -self.b, self.ring)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        r = self.ring
        a1, b1, a2, b2 = self.a, self.b, o.a, o.b
        return QuadInt(
            a1 * a2 + r.q * b1 * b2,
            a1 * b2 + b1 * a2 + r.p * b1 * b2,
            r,
        )

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "QuadInt":
        if n < 0:
            raise UsageError("negative powers only exist for units; invert explicitly")
        out = self.ring.one
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conj(self) -> "QuadInt":
        """Galois conjugate: omega -> P - omega."""
        return QuadInt(self.a + self.ring.p * self.b, -self.b, self.ring)

    def norm(self) -> int:
        """Signed algebraic norm x * conj(x), a rational integer."""
        a, b, r = self.a, self.b, self.ring
        return a * a + r.p * a * b - r.q * b * b

    def is_unit(self) -> bool:
        return abs(self.norm()) == 1

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def embed(self) -> float:
        return self.a + self.b * self.ring.omega

    def sign(self) -> int:
        """Exact sign of the real embedding."""
        s, t = self.ring._sqrt_form(self.a, self.b)
        return _sign_sqrt_form(s, t, self.ring.sqrt_d)

    def compare(self, other) -> int:
        """Exact sign of embed(self) - embed(other)."""
        o = self._coerce(other)
        return (self - o).sign()

    def __divmod__(self, other):
        """Nearest-integer division; |norm(remainder)| < |norm(divisor)|."""
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o.is_zero():
            raise ZeroDivisionError("division by zero ring element")
        num = self * o.conj()
        n = o.norm()
        q = QuadInt(_round_half_away(num.a, n), _round_half_away(num.b, n), self.ring)
        return q, self - o * q

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def divides(self, other) -> bool:
        o = self._coerce(other)
        return (o % self).is_zero()

    def __repr__(self) -> str:
        return f"QuadInt({self.a}, {self.b}, {self.ring.name})"

    def __str__(self) -> str:
        sym = {"sqrt2": "sqrt2", "tau": "tau", "sqrt3": "sqrt3"}[self.ring.name]
        return f"{self.a}{self.b:+d}*{sym}"


def canonical_associate(x: QuadInt) -> QuadInt:
    """The associate of x with real embedding in [1, eps), eps the fundamental unit.

    Every nonzero x has exactly one such associate, which makes gcd results
    deterministic.  Units map to 1.
    """
    if x.is_zero():
        raise UsageError("zero has no canonical associate")
    if x.sign() < 0:
        x = -x
    one = x.ring.one
    eps = x.ring.unit()
    eps_inv = x.ring.unit_inv()
    # embed(x) > 0 here; scale by the fundamental unit into [1, eps).
    guard = 0
    while x.compare(one) < 0:
        x = x * eps
        guard += 1
        if guard > 4096:
            raise ArithmeticError("canonicalisation failed to terminate")
    while x.compare(eps) >= 0:
        x = x * eps_inv
        guard += 1
        if guard > 8192:
            raise ArithmeticError("canonicalisation failed to terminate")
    return x


def gcd(x: QuadInt, y: QuadInt) -> QuadInt:
    """Euclidean gcd, returned as the canonical associate."""
    if x.ring is not y.ring:
        raise UsageError("gcd of elements from different rings")
    if x.is_zero() and y.is_zero():
        raise UsageError("gcd(0, 0) is undefined")
    while not y.is_zero():
        x, y = y, x % y
    return canonical_associate(x)


# ---------------------------------------------------------------------------
# Vectorised twins (int64 arrays).  Used for bulk coprimality and norm-class
# computations on large point sets; cross-checked against the scalar path in
# the test suite.
# ---------------------------------------------------------------------------


def _check_bounds(*arrays):
    for arr in arrays:
        if arr.size and int(np.abs(arr).max()) >= _VEC_COEFF_BOUND:
            raise OverflowError(
                "coefficient exceeds the int64-safe bound of the vectorised path; "
                "use the exact scalar QuadInt operations instead"
            )


def _as_i64(x):
    return np.asarray(x, dtype=np.int64)


def norm_vec(ring: Ring, a, b):
    a, b = _as_i64(a), _as_i64(b)
    return a * a + ring.p * a * b - ring.q * b * b


def conj_vec(ring: Ring, a, b):
    a, b = _as_i64(a), _as_i64(b)
    return a + ring.p * b, -b


def mul_vec(ring: Ring, a1, b1, a2, b2):
    a1, b1, a2, b2 = map(_as_i64, (a1, b1, a2, b2))
    return (
        a1 * a2 + ring.q * b1 * b2,
        a1 * b2 + b1 * a2 + ring.p * b1 * b2,
    )


def sign_embed_vec(ring: Ring, a, b):
    """Exact sign of embed(a + b*omega), elementwise."""
    a, b = _as_i64(a), _as_i64(b)
    _check_bounds(a, b)
    if ring.p == 0:
        s, t = a, b
    else:
        s, t = 2 * a + b, b
    d = ring.sqrt_d
    sgn_s = np.sign(s)
    sgn_t = np.sign(t)
    # For opposite coefficient signs the winner is decided by s^2 vs d*t^2:
    # sign(s + t*sqrt(d)) = sign(s) * sign(s^2 - d*t^2).
    opposite = sgn_s * np.sign(s * s - d * t * t)
    out = np.where(
        t == 0,
        sgn_s,
        np.where(
            s == 0,
            sgn_t,
            np.where(sgn_s == sgn_t, sgn_s, opposite),
        ),
    )
    return out.astype(np.int64)


def _rha_div_vec(p, k):
    """Elementwise round-half-away-from-zero of p / k (k nonzero)."""
    sign = np.where((p >= 0) == (k > 0), 1, -1)
    q = (2 * np.abs(p) + np.abs(k)) // (2 * np.abs(k))
    return sign * q


def _mul_pair(ring, xa, xb, ya, yb, mask=None):
    ra, rb = mul_vec(ring, xa, xb, ya, yb)
    if mask is None:
        return ra, rb
    return np.where(mask, ra, xa), np.where(mask, rb, xb)


def canonical_vec(ring: Ring, a, b):
    """Vectorised canonical associate; zero rows stay zero."""
    a, b = _as_i64(a).copy(), _as_i64(b).copy()
    _check_bounds(a, b)
    nonzero = (a != 0) | (b != 0)
    neg = sign_embed_vec(ring, a, b) < 0
    a = np.where(neg, -a, a)
    b = np.where(neg, -b, b)
    ua, ub = ring.fund_unit
    va, vb = ring.fund_unit_inv
    for _ in range(512):
        # embed < 1  <=>  sign(x - 1) < 0
        low = nonzero & (sign_embed_vec(ring, a - 1, b) < 0)
        if not low.any():
            break
        a, b = _mul_pair(ring, a, b, np.int64(ua), np.int64(ub), low)
    else:  # pragma: no cover
        raise ArithmeticError("canonicalisation failed to terminate")
    ea, eb = ring.fund_unit
    for _ in range(512):
        high = nonzero & (sign_embed_vec(ring, a - ea, b - eb) >= 0)
        if not high.any():
            break
        a, b = _mul_pair(ring, a, b, np.int64(va), np.int64(vb), high)
    else:  # pragma: no cover
        raise ArithmeticError("canonicalisation failed to terminate")
    return a, b


def gcd_vec(ring: Ring, xa, xb, ya, yb):
    """Elementwise Euclidean gcd of (xa + xb*omega, ya + yb*omega), canonical.

    Rows with both arguments zero raise UsageError.
    """
    xa, xb = _as_i64(xa).copy(), _as_i64(xb).copy()
    ya, yb = _as_i64(ya).copy(), _as_i64(yb).copy()
    _check_bounds(xa, xb, ya, yb)
    if np.any((xa == 0) & (xb == 0) & (ya == 0) & (yb == 0)):
        raise UsageError("gcd(0, 0) is undefined")
    for _ in range(256):
        active = (ya != 0) | (yb != 0)
        if not active.any():
            break
        n = norm_vec(ring, ya, yb)
        ca, cb = conj_vec(ring, ya, yb)
        pa, pb = mul_vec(ring, xa, xb, ca, cb)
        safe_n = np.where(active, n, 1)
        qa = _rha_div_vec(pa, safe_n)
        qb = _rha_div_vec(pb, safe_n)
        ta, tb = mul_vec(ring, qa, qb, ya, yb)
        ra, rb = xa - ta, xb - tb
        xa = np.where(active, ya, xa)
        xb = np.where(active, yb, xb)
        ya = np.where(active, ra, ya)
        yb = np.where(active, rb, yb)
    else:  # pragma: no cover
        raise ArithmeticError("vectorised gcd failed to terminate")
    return canonical_vec(ring, xa, xb)


def divide_exact_vec(ring: Ring, xa, xb, da, db):
    """Elementwise exact division x / d; raises if any remainder is nonzero."""
    xa, xb, da, db = map(_as_i64, (xa, xb, da, db))
    _check_bounds(xa, xb, da, db)
    n = norm_vec(ring, da, db)
    if np.any(n == 0):
        raise ZeroDivisionError("division by zero ring element")
    ca, cb = conj_vec(ring, da, db)
    pa, pb = mul_vec(ring, xa, xb, ca, cb)
    if np.any(pa % n) or np.any(pb % n):
        raise ArithmeticError("inexact ring division")
    return pa // n, pb // n
