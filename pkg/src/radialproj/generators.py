"""Generators for circular patches of the point sets in scope.

* ``gen_lattice``  -- all integer pairs in the closed disk of radius R;
* ``gen_poisson``  -- a homogeneous Poisson realization, reproducible via a
                      counter-based RNG keyed by (seed, point index);
* ``gen_cms``      -- cyclotomic model sets: every module point whose
                      direct-space image lies in the disk and whose star
                      image lies in the acceptance window.

The CMS enumeration inverts the rank-4 linear map (coefficients -> direct
x internal coordinates), covers the preimage of the disk-box x window-box
with an integer box, and filters candidates by the exact test.  That makes
the enumeration exhaustive by construction; a brute-force double loop
cross-checks it on small radii in the test suite.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cyclo import CYCLO5, CYCLO8, CYCLO12, CycloTag, Window, internal_xy
from .errors import ResourceError, UsageError
from .points import EXACT, FLOAT, LATTICE, PointSet

__all__ = [
    "CmsSpec",
    "cms_spec",
    "CMS_NAMES",
    "gen_lattice",
    "gen_poisson",
    "gen_cms",
]

# Memory budgets: final points and enumeration candidates.
MAX_POINTS = 30_000_000
MAX_CANDIDATES = 2_000_000_000
_CHUNK = 2_000_000

# Generic small window displacement, deliberately incommensurate with the
# window symmetry axes; recorded in provenance for reproducibility.
EPS_DIRECTION = (1.0e-4, 2.0e-4)


@dataclass(frozen=True)
class CmsSpec:
    """A named cyclotomic model set plus its local visibility data.

    ``vis_branches`` lists (norm_class, scale, window): a point is visible
    iff the absolute norm of the gcd of its module coordinates equals
    ``norm_class`` for some branch and its scaled star image escapes that
    branch's window.
    """

    name: str
    tag: CycloTag
    window: Window
    vis_branches: tuple
    scale_label: str

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "module": self.tag.n,
            "window": self.window.as_dict(),
            "scales": self.scale_label,
        }


def _eps(edge: float) -> tuple[float, float]:
    return (EPS_DIRECTION[0] * edge, EPS_DIRECTION[1] * edge)


def _build_ab() -> CmsSpec:
    window = Window(8, 1.0)
    silver = 1.0 + math.sqrt(2.0)
    return CmsSpec(
        name="ab",
        tag=CYCLO8,
        window=window,
        vis_branches=((1, silver, window),),
        scale_label="1+sqrt2",
    )


def _build_tt() -> CmsSpec:
    tau = (1.0 + math.sqrt(5.0)) / 2.0
    edge = math.sqrt((tau + 2.0) / 5.0)
    dx, dy = _eps(edge)
    window = Window(10, edge, shift=(dx, dy))
    return CmsSpec(
        name="tt",
        tag=CYCLO5,
        window=window,
        vis_branches=((1, tau, window),),
        scale_label="tau",
    )


def _build_gs() -> CmsSpec:
    s3 = math.sqrt(3.0)
    dx, dy = _eps(1.0)
    plus = Window(12, 1.0, shift=(dx, dy))
    minus = Window(12, 1.0, shift=(-dx, -dy))
    lam1 = 1.0 + s3          # sqrt(2 * (2+sqrt3))
    lam2 = (1.0 + s3) / 2.0  # sqrt((2+sqrt3) / 2)
    return CmsSpec(
        name="gs",
        tag=CYCLO12,
        window=plus,
        vis_branches=((1, lam1, plus), (2, lam2, minus)),
        scale_label="lambda1=1+sqrt3, lambda2=(1+sqrt3)/2",
    )


_CMS_BUILDERS = {"ab": _build_ab, "tt": _build_tt, "gs": _build_gs}
CMS_NAMES = tuple(_CMS_BUILDERS)


def cms_spec(name: str) -> CmsSpec:
    try:
        return _CMS_BUILDERS[name]()
    except KeyError:
        raise UsageError(
            f"unknown model set {name!r}; available: {', '.join(CMS_NAMES)}"
        ) from None


# ---------------------------------------------------------------------------
# Integer lattice
# ---------------------------------------------------------------------------


def gen_lattice(radius: float) -> PointSet:
    """All integer pairs (a, b) with a^2 + b^2 <= radius^2."""
    if not (radius > 0.0):
        raise UsageError("radius must be positive")
    r = int(math.floor(radius))
    grid = 2 * r + 1
    if grid * grid > 4 * MAX_POINTS:
        raise ResourceError(
            f"lattice patch would enumerate ~{grid * grid:.3g} cells "
            f"(budget {4 * MAX_POINTS:.3g}); reduce the radius"
        )
    axis = np.arange(-r, r + 1, dtype=np.int64)
    aa, bb = np.meshgrid(axis, axis, indexing="ij")
    mask = aa * aa + bb * bb <= radius * radius
    coords = np.column_stack((aa[mask], bb[mask]))
    ps = PointSet(
        LATTICE,
        coords,
        provenance={"generator": "z2", "radius": radius, "count": int(mask.sum())},
    )
    return ps.sorted()


# ---------------------------------------------------------------------------
# Poisson process via a counter-based generator (Philox4x32-10)
# ---------------------------------------------------------------------------

_PHILOX_M0 = np.uint64(0xD2511F53)
_PHILOX_M1 = np.uint64(0xCD9E8D57)
_PHILOX_W0 = np.uint64(0x9E3779B9)
_PHILOX_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)


def _philox4x32(c0, c1, c2, c3, k0, k1):
    """Vectorised Philox4x32-10 block; all inputs uint64 arrays of 32-bit values."""
    for _ in range(10):
        p0 = (_PHILOX_M0 * c0) & np.uint64(0xFFFFFFFFFFFFFFFF)
        p1 = (_PHILOX_M1 * c2) & np.uint64(0xFFFFFFFFFFFFFFFF)
        hi0, lo0 = p0 >> np.uint64(32), p0 & _MASK32
        hi1, lo1 = p1 >> np.uint64(32), p1 & _MASK32
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = (k0 + _PHILOX_W0) & _MASK32
        k1 = (k1 + _PHILOX_W1) & _MASK32
    return c0, c1, c2, c3


def _point_uniforms(seed: int, indices: np.ndarray, attempt: int):
    """Two U[0,1) draws per point index, a pure function of (seed, index, attempt)."""
    seed = seed & 0xFFFFFFFFFFFFFFFF
    k0 = np.full(indices.shape, seed & 0xFFFFFFFF, dtype=np.uint64)
    k1 = np.full(indices.shape, (seed >> 32) & 0xFFFFFFFF, dtype=np.uint64)
    c0 = np.full(indices.shape, attempt & 0xFFFFFFFF, dtype=np.uint64)
    c1 = indices.astype(np.uint64) & _MASK32
    c2 = (indices.astype(np.uint64) >> np.uint64(32)) & _MASK32
    c3 = np.full(indices.shape, (attempt >> 32) & 0xFFFFFFFF, dtype=np.uint64)
    w0, w1, w2, w3 = _philox4x32(c0, c1, c2, c3, k0, k1)
    u = ((w0 >> np.uint64(6)).astype(np.float64) * float(1 << 26)
         + (w1 >> np.uint64(6)).astype(np.float64)) * (0.5 ** 52)
    v = ((w2 >> np.uint64(6)).astype(np.float64) * float(1 << 26)
         + (w3 >> np.uint64(6)).astype(np.float64)) * (0.5 ** 52)
    return u, v


def gen_poisson(radius: float, intensity: float, seed: int) -> PointSet:
    """Homogeneous Poisson realization in the disk, plus the origin as x0.

    Conditioning a Poisson process on containing the observation point adds
    an independent point at that location, so appending the origin keeps the
    radial statistics exact while guaranteeing the reference point belongs
    to the set.  Each point's coordinates depend only on (seed, index), so
    the output is independent of any execution parallelism.
    """
    if not (radius > 0.0):
        raise UsageError("radius must be positive")
    if not (intensity > 0.0):
        raise UsageError("intensity must be positive")
    lam = intensity * math.pi * radius * radius
    if lam > MAX_POINTS:
        raise ResourceError(
            f"expected count {lam:.3g} exceeds the point budget {MAX_POINTS:.3g}"
        )
    count_rng = np.random.Generator(np.random.Philox(key=seed & 0xFFFFFFFFFFFFFFFF))
    n = int(count_rng.poisson(lam))
    out = np.empty((n, 2), dtype=np.float64)
    pending = np.arange(n, dtype=np.uint64)
    attempt = 0
    while pending.size:
        u, v = _point_uniforms(seed, pending, attempt)
        x = (2.0 * u - 1.0) * radius
        y = (2.0 * v - 1.0) * radius
        ok = x * x + y * y <= radius * radius
        idx = pending[ok].astype(np.int64)
        out[idx, 0] = x[ok]
        out[idx, 1] = y[ok]
        pending = pending[~ok]
        attempt += 1
        if attempt > 10_000:  # pragma: no cover
            raise RuntimeError("rejection sampling failed to converge")
    coords = np.vstack((np.zeros((1, 2)), out))
    ps = PointSet(
        FLOAT,
        coords,
        provenance={
            "generator": "poisson",
            "radius": radius,
            "intensity": intensity,
            "seed": int(seed),
            "count": n,
            "includes_reference": True,
        },
    )
    return ps.sorted()


# ---------------------------------------------------------------------------
# Cyclotomic model sets
# ---------------------------------------------------------------------------


def _embedding_matrix(tag: CycloTag) -> np.ndarray:
    """Columns: coefficients (x1_a, x1_b, x2_a, x2_b) -> (dx, dy, ix, iy)."""
    w = tag.ring.omega
    wc = tag.ring.p - w
    cd, sd = math.cos(tag.direct_angle), math.sin(tag.direct_angle)
    ci, si = math.cos(tag.internal_angle), math.sin(tag.internal_angle)
    return np.array(
        [
            [1.0, w, cd, w * cd],
            [0.0, 0.0, sd, w * sd],
            [1.0, wc, ci, wc * ci],
            [0.0, 0.0, si, wc * si],
        ]
    )


def lattice_covolume(tag: CycloTag) -> float:
    """Covolume of the embedded rank-4 module in direct x internal space."""
    return abs(float(np.linalg.det(_embedding_matrix(tag))))


def point_density(spec: CmsSpec) -> float:
    """Expected number of model-set points per unit area of direct space."""
    w = spec.window
    area = 0.5 * w.sides * w.circumradius ** 2 * math.sin(2.0 * math.pi / w.sides)
    return area / lattice_covolume(spec.tag)


def _coefficient_box(spec: CmsSpec, radius: float):
    """Loose axis-aligned coefficient bounds (brute-force cross-check only)."""
    L = _embedding_matrix(spec.tag)
    Linv = np.linalg.inv(L)
    w = spec.window
    hw = np.array([radius, radius, w.bounding_halfwidth(), w.bounding_halfwidth()])
    center = np.array([0.0, 0.0, w.shift[0], w.shift[1]])
    c0 = Linv @ center
    h = np.abs(Linv) @ hw + 1e-6
    lo = np.floor(c0 - h).astype(np.int64)
    hi = np.ceil(c0 + h).astype(np.int64)
    return lo, hi


_RANGE_PAD = 1e-7


def _ring_rect_pairs(ring, ulo, uhi, vlo, vhi):
    """Integer (a, b) with a + b*omega in [ulo, uhi] and its conjugate in [vlo, vhi].

    The pair (embedding, conjugate embedding) identifies ring elements with a
    planar lattice, so the rectangle is enumerated exactly: a contiguous a-run
    for every feasible b.
    """
    wu = ring.omega
    wv = ring.p - ring.omega
    gap = wu - wv  # 2*sqrt(d) or sqrt(5); positive
    blo = math.ceil((ulo - vhi) / gap - _RANGE_PAD)
    bhi = math.floor((uhi - vlo) / gap + _RANGE_PAD)
    out = []
    for b in range(blo, bhi + 1):
        alo = math.ceil(max(ulo - b * wu, vlo - b * wv) - _RANGE_PAD)
        ahi = math.floor(min(uhi - b * wu, vhi - b * wv) + _RANGE_PAD)
        if alo > ahi:
            continue
        a = np.arange(alo, ahi + 1, dtype=np.int64)
        out.append((a, np.full(len(a), b, dtype=np.int64)))
    if not out:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate([a for a, _ in out]), np.concatenate([b for _, b in out])


def _candidate_rows(spec: CmsSpec, radius: float, outer: np.ndarray) -> np.ndarray:
    """Candidate coefficient rows for a batch of (x2_a, x2_b) outer pairs."""
    tag = spec.tag
    ring = tag.ring
    w = spec.window
    wu, wv = ring.omega, ring.p - ring.omega
    cd, sd = math.cos(tag.direct_angle), math.sin(tag.direct_angle)
    ci = math.cos(tag.internal_angle)
    hw = w.bounding_halfwidth()
    rows = []
    for a2, b2 in outer:
        u2 = a2 + b2 * wu
        v2 = a2 + b2 * wv
        dy = u2 * sd
        if dy * dy > radius * radius + _RANGE_PAD:
            continue
        sx = math.sqrt(max(0.0, radius * radius - dy * dy))
        a1, b1 = _ring_rect_pairs(
            ring,
            -sx - u2 * cd,
            sx - u2 * cd,
            (w.shift[0] - hw) - v2 * ci,
            (w.shift[0] + hw) - v2 * ci,
        )
        if len(a1):
            block = np.empty((len(a1), 4), dtype=np.int64)
            block[:, 0] = a1
            block[:, 1] = b1
            block[:, 2] = a2
            block[:, 3] = b2
            rows.append(block)
    if not rows:
        return np.empty((0, 4), dtype=np.int64)
    return np.vstack(rows)


def _filter_exact(spec: CmsSpec, radius: float, rows: np.ndarray):
    """Apply the defining membership test to candidate coefficient rows."""
    xy = internal_xy(spec.tag, rows)
    inside, near = spec.window.contains_many(xy)
    band = int(np.count_nonzero(near))
    rows = rows[inside]
    if len(rows):
        e1 = rows[:, 0] + rows[:, 1] * spec.tag.ring.omega
        e2 = rows[:, 2] + rows[:, 3] * spec.tag.ring.omega
        cd, sd = math.cos(spec.tag.direct_angle), math.sin(spec.tag.direct_angle)
        dx = e1 + e2 * cd
        dy = e2 * sd
        rows = rows[dx * dx + dy * dy <= radius * radius]
    return rows, band


def gen_cms(spec: CmsSpec, radius: float, threads: int | None = None) -> PointSet:
    """Every module point in the disk whose star image lies in the window."""
    if not (radius > 0.0):
        raise UsageError("radius must be positive")
    est = point_density(spec) * math.pi * radius * radius
    if est > MAX_POINTS:
        raise ResourceError(
            f"model set {spec.name} at R={radius:g} holds ~{est:.3g} points "
            f"(budget {MAX_POINTS:.3g}); reduce the radius"
        )
    tag = spec.tag
    ring = tag.ring
    w = spec.window
    sd = math.sin(tag.direct_angle)
    si = math.sin(tag.internal_angle)
    hw = w.bounding_halfwidth()
    # x2 is pinned by the direct/internal y-coordinates alone.
    ylo, yhi = (w.shift[1] - hw) / si, (w.shift[1] + hw) / si
    a2, b2 = _ring_rect_pairs(ring, -radius / sd, radius / sd, min(ylo, yhi), max(ylo, yhi))
    outer = np.column_stack((a2, b2))
    if len(outer) * 8 > MAX_CANDIDATES:
        raise ResourceError(
            f"enumeration would visit too many slabs ({len(outer):.3g}); reduce the radius"
        )

    n_threads = threads if threads and threads > 1 else 1
    batches = np.array_split(outer, max(1, min(len(outer), n_threads * 8)))

    def job(batch):
        return _filter_exact(spec, radius, _candidate_rows(spec, radius, batch))

    if n_threads > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(job, batches))
    else:
        results = [job(b) for b in batches]

    kept = [r for r, _ in results if len(r)]
    band_total = sum(b for _, b in results)
    coords = np.vstack(kept) if kept else np.empty((0, 4), dtype=np.int64)
    ps = PointSet(
        EXACT,
        coords,
        tag=spec.tag,
        provenance={
            "generator": spec.name,
            "radius": radius,
            "window": spec.window.as_dict(),
            "scales": spec.scale_label,
            "boundary_band_points": band_total,
            "count": int(len(coords)),
        },
    )
    ps = ps.sorted()
    # The origin is the default observation point; it must belong to the set.
    if len(ps) and not ((ps.coords == 0).all(axis=1)).any():
        raise RuntimeError(
            f"model set {spec.name} unexpectedly excludes the origin; "
            "check the window shift"
        )
    return ps
