"""Cyclotomic module points, star maps, planar embeddings and polygon windows.

A point of the rank-4 module Z[zeta_n] (n = 8, 5, 12) is written
x = x1 + x2 * zeta_n with x1, x2 in the matching real quadratic ring.  The
reduction relation zeta_n^2 = u_n * zeta_n - 1 closes multiplication, and
the star map sends zeta_n to zeta_n^s (s = 3, 2, 5) while conjugating the
ring coefficients.  `embed_direct` and `embed_internal` evaluate a point in
direct and internal space.

Windows are regular convex polygons with a rotation and a shift.  Boundary
membership follows a half-open convention (an edge belongs to the window
iff its outward normal points into the open left half plane, ties broken
downward) so translated window copies never double-count a point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import UsageError
from .rings import SQRT2, SQRT3, TAU, QuadInt, Ring

__all__ = [
    "CycloTag",
    "CYCLO8",
    "CYCLO5",
    "CYCLO12",
    "CYCLOTOMIC",
    "ModulePoint",
    "module_point",
    "Window",
    "direct_xy",
    "internal_xy",
]

# Treat a point within this distance of a window edge as lying on it; the
# half-open rule then decides membership deterministically.
_EDGE_SNAP = 1e-12
# Points this close to an edge are counted in diagnostics (generic shifts
# should keep exact module points out of this band entirely).
_EDGE_BAND = 1e-9


@dataclass(frozen=True)
class CycloTag:
    """Root order n plus the data that closes arithmetic over {1, zeta_n}."""

    n: int
    ring: Ring
    star_power: int
    # zeta^2 = zsq_u * zeta - 1
    zsq_u: QuadInt
    # zeta^star_power = star_u * zeta + star_v
    star_u: QuadInt
    star_v: QuadInt

    def __repr__(self) -> str:
        return f"CycloTag(n={self.n})"

    @property
    def direct_angle(self) -> float:
        return 2.0 * math.pi / self.n

    @property
    def internal_angle(self) -> float:
        return 2.0 * math.pi * self.star_power / self.n


CYCLO8 = CycloTag(8, SQRT2, 3, QuadInt(0, 1, SQRT2), QuadInt(1, 0, SQRT2), QuadInt(0, -1, SQRT2))
CYCLO5 = CycloTag(5, TAU, 2, QuadInt(-1, 1, TAU), QuadInt(-1, 1, TAU), QuadInt(-1, 0, TAU))
CYCLO12 = CycloTag(12, SQRT3, 5, QuadInt(0, 1, SQRT3), QuadInt(1, 0, SQRT3), QuadInt(0, -1, SQRT3))

CYCLOTOMIC = {8: CYCLO8, 5: CYCLO5, 12: CYCLO12}


@dataclass(frozen=True)
class ModulePoint:
    """Exact module element x1 + x2 * zeta_n."""

    x1: QuadInt
    x2: QuadInt
    tag: CycloTag

    def __post_init__(self):
        if self.x1.ring is not self.tag.ring or self.x2.ring is not self.tag.ring:
            raise UsageError("coefficient ring does not match the cyclotomic tag")

    def _coerce(self, other) -> "ModulePoint":
        if isinstance(other, ModulePoint):
            if other.tag is not self.tag:
                raise UsageError("mixed cyclotomic modules")
            return other
        if isinstance(other, QuadInt):
            return ModulePoint(other, self.tag.ring.zero, self.tag)
        if isinstance(other, int):
            return ModulePoint(QuadInt(other, 0, self.tag.ring), self.tag.ring.zero, self.tag)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return ModulePoint(self.x1 + o.x1, self.x2 + o.x2, self.tag)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return ModulePoint(self.x1 - o.x1, self.x2 - o.x2, self.tag)

    def __neg__(self):
        return ModulePoint(-self.x1, -self.x2, self.tag)

    def __mul__(self, other):
        """Module product, reduced via zeta^2 = u*zeta - 1."""
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        u = self.tag.zsq_u
        a, b, c, d = self.x1, self.x2, o.x1, o.x2
        return ModulePoint(a * c - b * d, a * d + b * c + u * b * d, self.tag)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return self.x1.is_zero() and self.x2.is_zero()

    def star(self) -> "ModulePoint":
        """Algebraic conjugation zeta -> zeta^s with ring coefficients conjugated."""
        t = self.tag
        c1, c2 = self.x1.conj(), self.x2.conj()
        return ModulePoint(c1 + t.star_v * c2, t.star_u * c2, t)

    def direct(self) -> tuple[float, float]:
        t = self.tag
        e1, e2 = self.x1.embed(), self.x2.embed()
        return (
            e1 + e2 * math.cos(t.direct_angle),
            e2 * math.sin(t.direct_angle),
        )

    def internal(self) -> tuple[float, float]:
        t = self.tag
        e1, e2 = self.x1.conj().embed(), self.x2.conj().embed()
        return (
            e1 + e2 * math.cos(t.internal_angle),
            e2 * math.sin(t.internal_angle),
        )

    def coeffs(self) -> tuple[int, int, int, int]:
        return (self.x1.a, self.x1.b, self.x2.a, self.x2.b)

    def __repr__(self) -> str:
        return f"ModulePoint(({self.x1}) + ({self.x2})*zeta{self.tag.n})"


def module_point(tag: CycloTag, c1: int, c2: int, c3: int, c4: int) -> ModulePoint:
    """Build a module point from the four integer coefficients."""
    r = tag.ring
    return ModulePoint(QuadInt(c1, c2, r), QuadInt(c3, c4, r), tag)


def direct_xy(tag: CycloTag, coeffs: np.ndarray) -> np.ndarray:
    """Direct-space embedding for an (m, 4) int array of coefficients."""
    coeffs = np.asarray(coeffs)
    e1 = coeffs[:, 0] + coeffs[:, 1] * tag.ring.omega
    e2 = coeffs[:, 2] + coeffs[:, 3] * tag.ring.omega
    ang = tag.direct_angle
    return np.column_stack((e1 + e2 * math.cos(ang), e2 * math.sin(ang)))


def internal_xy(tag: CycloTag, coeffs: np.ndarray) -> np.ndarray:
    """Internal-space embedding (the star image) for coefficient rows."""
    coeffs = np.asarray(coeffs)
    p = tag.ring.p
    e1 = (coeffs[:, 0] + p * coeffs[:, 1]) - coeffs[:, 1] * tag.ring.omega
    e2 = (coeffs[:, 2] + p * coeffs[:, 3]) - coeffs[:, 3] * tag.ring.omega
    ang = tag.internal_angle
    return np.column_stack((e1 + e2 * math.cos(ang), e2 * math.sin(ang)))


def _snap_zero(v: float) -> float:
    return 0.0 if abs(v) <= 1e-15 else v


@dataclass(frozen=True)
class Window:
    """Regular convex polygon acceptance domain with rotation and shift."""

    sides: int
    edge_length: float
    rotation: float = 0.0
    shift: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.sides < 3:
            raise UsageError("window needs at least 3 sides")
        if not (self.edge_length > 0.0):
            raise UsageError("window edge length must be positive")

    @property
    def circumradius(self) -> float:
        return self.edge_length / (2.0 * math.sin(math.pi / self.sides))

    @property
    def apothem(self) -> float:
        return self.edge_length / (2.0 * math.tan(math.pi / self.sides))

    def vertices(self) -> np.ndarray:
        k = np.arange(self.sides)
        ang = self.rotation + 2.0 * math.pi * k / self.sides
        r = self.circumradius
        return np.column_stack(
            (self.shift[0] + r * np.cos(ang), self.shift[1] + r * np.sin(ang))
        )

    def _normals(self) -> np.ndarray:
        k = np.arange(self.sides)
        ang = self.rotation + (2.0 * k + 1.0) * math.pi / self.sides
        nx = np.array([_snap_zero(math.cos(a)) for a in ang])
        ny = np.array([_snap_zero(math.sin(a)) for a in ang])
        return np.column_stack((nx, ny))

    def _edge_included(self, nx: float, ny: float) -> bool:
        # Half-open convention: keep the edge whose outward normal points
        # left, or straight down when vertical.
        if nx < 0.0:
            return True
        return nx == 0.0 and ny < 0.0

    def contains_many(self, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Membership plus a near-edge diagnostic flag for each point."""
        xy = np.asarray(xy, dtype=float)
        if xy.ndim == 1:
            xy = xy[None, :]
        if not np.isfinite(xy).all():
            raise UsageError("window containment of non-finite point")
        qx = xy[:, 0] - self.shift[0]
        qy = xy[:, 1] - self.shift[1]
        a = self.apothem
        snap = _EDGE_SNAP * max(1.0, self.circumradius)
        inside = np.ones(len(qx), dtype=bool)
        near = np.zeros(len(qx), dtype=bool)
        for nx, ny in self._normals():
            d = qx * nx + qy * ny
            near |= np.abs(d - a) <= _EDGE_BAND
            on_edge = np.abs(d - a) <= snap
            if self._edge_included(nx, ny):
                inside &= (d < a - snap) | on_edge
            else:
                inside &= (d < a - snap) & ~on_edge
        return inside, near

    def contains(self, p) -> bool:
        inside, _ = self.contains_many(np.asarray(p, dtype=float))
        return bool(inside[0])

    def scaled(self, s: float) -> "Window":
        if not (s > 0.0):
            raise UsageError("window scale factor must be positive")
        return replace(
            self,
            edge_length=self.edge_length * s,
            shift=(self.shift[0] * s, self.shift[1] * s),
        )

    def translated(self, dx: float, dy: float) -> "Window":
        return replace(self, shift=(self.shift[0] + dx, self.shift[1] + dy))

    def bounding_halfwidth(self) -> float:
        return self.circumradius

    def as_dict(self) -> dict:
        return {
            "sides": self.sides,
            "edge_length": self.edge_length,
            "rotation": self.rotation,
            "shift": list(self.shift),
        }
