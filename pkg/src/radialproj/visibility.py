"""Visibility of points from the reference point x0.

``visible_brute_force`` implements the defining test: a point survives iff
no other member of the set lies strictly between it and x0.  It groups
points by their ray from x0 and keeps the nearest per ray; ray identity is
exact for lattice and module coordinates (primitive integer or primitive
module direction) and tolerance-based for float data.

The fast tests reproduce the oracle with local predicates:

* ``visible_lattice`` -- gcd(|a|, |b|) = 1 on Z^2;
* ``visible_cms``     -- per norm-class branch, the gcd of the module
  coordinates has absolute norm equal to the branch class and the scaled
  star image escapes the branch window.  The silver-mean/golden-mean cases
  are the single branch with class 1 (coprime coordinates); the twelvefold
  case adds the exceptional norm-class-2 branch.
"""

from __future__ import annotations

import numpy as np

from .cyclo import internal_xy
from .errors import UsageError
from .generators import CmsSpec
from .points import EXACT, FLOAT, LATTICE, PointSet
from .rings import (
    canonical_vec,
    divide_exact_vec,
    gcd_vec,
    mul_vec,
    norm_vec,
    sign_embed_vec,
)

__all__ = [
    "visible_brute_force",
    "visible_lattice",
    "visible_cms",
    "visible",
]

# Two float-kind points within this angle (radians) of each other count as
# lying on the same ray from x0.
ANGLE_TOLERANCE = 1e-9


def _drop_reference(ps: PointSet) -> np.ndarray:
    """Coordinates relative to x0 with the reference row removed."""
    ps.reference_index()  # raises if x0 is not in the set
    rel = ps.coords - ps.reference
    keep = ~(rel == 0).all(axis=1)
    return rel[keep]


def _result(ps: PointSet, rel_coords: np.ndarray, method: str) -> PointSet:
    coords = rel_coords + ps.reference
    out = PointSet(
        ps.kind,
        coords,
        tag=ps.tag,
        reference=ps.reference,
        provenance={**ps.provenance, "visibility": method, "visible_count": len(coords)},
    )
    return out.sorted()


# ---------------------------------------------------------------------------
# Generic oracle
# ---------------------------------------------------------------------------


def _keep_nearest_per_group(keys: np.ndarray, dist2: np.ndarray) -> np.ndarray:
    """Boolean mask keeping the minimal-distance row of each key group."""
    if len(keys) == 0:
        return np.zeros(0, dtype=bool)
    # Sort by key columns with distance as the innermost key: the first row
    # of every key group is then the nearest point on that ray.
    order = np.lexsort((dist2,) + tuple(keys[:, j] for j in range(keys.shape[1] - 1, -1, -1)))
    sk = keys[order]
    first = np.empty(len(sk), dtype=bool)
    first[0] = True
    first[1:] = (sk[1:] != sk[:-1]).any(axis=1)
    mask = np.zeros(len(keys), dtype=bool)
    mask[order[first]] = True
    return mask


def _brute_lattice(rel: np.ndarray) -> np.ndarray:
    g = np.gcd(np.abs(rel[:, 0]), np.abs(rel[:, 1]))
    prim = rel // g[:, None]
    dist2 = (rel * rel).sum(axis=1)
    return rel[_keep_nearest_per_group(prim, dist2)]


def _brute_exact(rel: np.ndarray, tag) -> np.ndarray:
    ring = tag.ring
    ga, gb = gcd_vec(ring, rel[:, 0], rel[:, 1], rel[:, 2], rel[:, 3])
    u1a, u1b = divide_exact_vec(ring, rel[:, 0], rel[:, 1], ga, gb)
    u2a, u2b = divide_exact_vec(ring, rel[:, 2], rel[:, 3], ga, gb)
    # Normalise the primitive pair by positive units so that each ray has one
    # canonical key.  Positive units preserve ray orientation; the reference
    # coordinate is the first nonzero one, scaled until |embed| is in [1, eps).
    ref_is_1 = (u1a != 0) | (u1b != 0)
    ra = np.where(ref_is_1, u1a, u2a)
    rb = np.where(ref_is_1, u1b, u2b)
    sgn = sign_embed_vec(ring, ra, rb)
    fa, fb = ring.fund_unit
    ia, ib = ring.fund_unit_inv
    for _ in range(512):
        # |embed(ref)| < 1: compare against +1 or -1 according to the sign.
        low = np.where(sgn > 0, sign_embed_vec(ring, ra - 1, rb) < 0,
                       sign_embed_vec(ring, ra + 1, rb) > 0)
        if not low.any():
            break
        ra, rb = _masked_mul(ring, ra, rb, fa, fb, low)
        u1a, u1b = _masked_mul(ring, u1a, u1b, fa, fb, low)
        u2a, u2b = _masked_mul(ring, u2a, u2b, fa, fb, low)
    else:  # pragma: no cover
        raise ArithmeticError("ray normalisation failed to terminate")
    ea, eb = ring.fund_unit
    for _ in range(512):
        # |embed(ref)| >= eps
        high = np.where(
            sgn > 0,
            sign_embed_vec(ring, ra - ea, rb - eb) >= 0,
            sign_embed_vec(ring, ra + ea, rb + eb) <= 0,
        )
        if not high.any():
            break
        ra, rb = _masked_mul(ring, ra, rb, ia, ib, high)
        u1a, u1b = _masked_mul(ring, u1a, u1b, ia, ib, high)
        u2a, u2b = _masked_mul(ring, u2a, u2b, ia, ib, high)
    else:  # pragma: no cover
        raise ArithmeticError("ray normalisation failed to terminate")
    keys = np.column_stack((u1a, u1b, u2a, u2b))
    from .cyclo import direct_xy

    xy = direct_xy(tag, rel)
    dist2 = (xy * xy).sum(axis=1)
    return rel[_keep_nearest_per_group(keys, dist2)]


def _masked_mul(ring, a, b, ua, ub, mask):
    pa, pb = mul_vec(ring, a, b, np.int64(ua), np.int64(ub))
    return np.where(mask, pa, a), np.where(mask, pb, b)


def _brute_float(rel: np.ndarray, tol: float) -> np.ndarray:
    if len(rel) == 0:
        return rel
    ang = np.arctan2(rel[:, 1], rel[:, 0])
    dist2 = (rel * rel).sum(axis=1)
    order = np.argsort(ang, kind="stable")
    ang_s = ang[order]
    # Consecutive angles within tol belong to one ray cluster.
    new_cluster = np.empty(len(ang_s), dtype=bool)
    new_cluster[0] = True
    new_cluster[1:] = np.diff(ang_s) > tol
    cluster = np.cumsum(new_cluster) - 1
    # Wrap-around: merge the last cluster into the first when they touch.
    if len(ang_s) > 1 and (ang_s[0] + 2.0 * np.pi - ang_s[-1]) <= tol:
        cluster[cluster == cluster[-1]] = cluster[0]
    keep_sorted = _keep_nearest_per_group(cluster[:, None], dist2[order])
    keep = np.zeros(len(rel), dtype=bool)
    keep[order[keep_sorted]] = True
    return rel[keep]


def visible_brute_force(ps: PointSet, angle_tolerance: float = ANGLE_TOLERANCE) -> PointSet:
    """Keep exactly the points with no blocker strictly between them and x0."""
    rel = _drop_reference(ps)
    if ps.kind == LATTICE:
        kept = _brute_lattice(rel)
    elif ps.kind == EXACT:
        kept = _brute_exact(rel, ps.tag)
    else:
        kept = _brute_float(rel, angle_tolerance)
    return _result(ps, kept, "brute-force")


# ---------------------------------------------------------------------------
# Fast local tests
# ---------------------------------------------------------------------------


def visible_lattice(ps: PointSet) -> PointSet:
    """Visible points of Z^2: coprime coordinate pairs."""
    if ps.kind != LATTICE:
        raise UsageError("the gcd visibility test needs a lattice point set")
    rel = _drop_reference(ps)
    g = np.gcd(np.abs(rel[:, 0]), np.abs(rel[:, 1]))
    return _result(ps, rel[g == 1], "lattice-gcd")


def visible_cms(ps: PointSet, spec: CmsSpec) -> PointSet:
    """Local visibility test for a cyclotomic model set (branch per norm class)."""
    if ps.kind != EXACT:
        raise UsageError("the model-set visibility test needs an exact point set")
    if ps.tag is not spec.tag:
        raise UsageError(
            f"point set is over zeta_{ps.tag.n}, spec {spec.name} expects zeta_{spec.tag.n}"
        )
    if (ps.reference != 0).any():
        raise UsageError("the local visibility test assumes x0 = 0")
    rel = _drop_reference(ps)
    ring = spec.tag.ring
    ga, gb = gcd_vec(ring, rel[:, 0], rel[:, 1], rel[:, 2], rel[:, 3])
    nclass = np.abs(norm_vec(ring, ga, gb))
    xy = internal_xy(spec.tag, rel)
    keep = np.zeros(len(rel), dtype=bool)
    for norm_class, scale, window in spec.vis_branches:
        inside, _ = window.contains_many(xy * scale)
        keep |= (nclass == norm_class) & ~inside
    return _result(ps, rel[keep], f"cms-local:{spec.name}")


def visible(ps: PointSet, method: str = "auto", spec: CmsSpec | None = None,
            angle_tolerance: float = ANGLE_TOLERANCE) -> PointSet:
    """Dispatch on method name: auto, brute, gcd or local."""
    if method == "auto":
        if ps.kind == LATTICE and ps.provenance.get("generator") == "z2":
            method = "gcd"
        elif ps.kind == EXACT and spec is not None:
            method = "local"
        else:
            method = "brute"
    if method == "brute":
        return visible_brute_force(ps, angle_tolerance)
    if method == "gcd":
        return visible_lattice(ps)
    if method == "local":
        if spec is None:
            raise UsageError("local visibility needs a model-set spec")
        return visible_cms(ps, spec)
    raise UsageError(f"unknown visibility method {method!r}")
