"""Radial projection pipeline: angles, normalized gaps, spacing histograms.

Visible points are projected to their full-circle angle about x0, sorted,
rescaled by n/(2*pi) so the mean spacing is 1, and differenced into the gap
list whose empirical distribution is the object of interest.  By default
the list holds the n-1 interior gaps; the wrap-around gap can be included,
in which case the gaps sum to exactly n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrityError, UsageError
from .points import PointSet

__all__ = [
    "AngularProfile",
    "GapList",
    "SpacingHistogram",
    "project_angles",
    "normalized_gaps",
    "histogram",
    "merge_histograms",
    "run_pipeline",
]

# Two projected angles closer than this signal a visibility failure.
DUPLICATE_ANGLE = 1e-12


@dataclass(frozen=True)
class AngularProfile:
    """Sorted full-circle angles of the visible points about x0."""

    angles: np.ndarray
    radius: float

    @property
    def n(self) -> int:
        return len(self.angles)


@dataclass(frozen=True)
class GapList:
    """Normalized consecutive angular spacings (mean ~ 1)."""

    gaps: np.ndarray
    normalization: float
    include_wraparound: bool

    def __len__(self) -> int:
        return len(self.gaps)


@dataclass(frozen=True)
class SpacingHistogram:
    """Fixed-width binned view of a gap list, overflow tracked separately."""

    bin_width: float
    t_max: float
    counts: np.ndarray
    overflow: int
    total: int
    metadata: dict = field(default_factory=dict)

    @property
    def edges(self) -> np.ndarray:
        k = len(self.counts)
        return self.bin_width * np.arange(k + 1)

    def density(self) -> np.ndarray:
        if self.total == 0:
            return np.zeros_like(self.counts, dtype=float)
        return self.counts / (self.total * self.bin_width)

    def in_range_fraction(self) -> float:
        return 1.0 if self.total == 0 else float(self.counts.sum()) / self.total


def project_angles(ps: PointSet, radius: float | None = None) -> AngularProfile:
    """Quadrant-correct angles in [0, 2*pi) of all points about x0, sorted."""
    xy = ps.positions() - ps.reference_position()
    keep = ~((xy == 0.0).all(axis=1))
    xy = xy[keep]
    if len(xy) == 0:
        raise UsageError("no points to project")
    ang = np.arctan2(xy[:, 1], xy[:, 0])
    ang = np.where(ang < 0.0, ang + 2.0 * math.pi, ang)
    ang.sort(kind="stable")
    if len(ang) > 1 and (np.diff(ang) < DUPLICATE_ANGLE).any():
        raise IntegrityError(
            "duplicate projection angle: the input set was not a visible set"
        )
    if radius is None:
        radius = float(ps.provenance.get("radius", 0.0))
    return AngularProfile(ang, radius)


def normalized_gaps(profile: AngularProfile, include_wraparound: bool = False) -> GapList:
    """Consecutive differences scaled by n/(2*pi)."""
    n = profile.n
    if n < 2:
        raise UsageError("need at least two angles to form gaps")
    factor = n / (2.0 * math.pi)
    gaps = np.diff(profile.angles) * factor
    if include_wraparound:
        wrap = (profile.angles[0] + 2.0 * math.pi - profile.angles[-1]) * factor
        gaps = np.append(gaps, wrap)
    return GapList(gaps, factor, include_wraparound)


def histogram(gl: GapList, bin_width: float = 0.01, t_max: float = 4.0,
              metadata: dict | None = None) -> SpacingHistogram:
    if not (bin_width > 0.0) or not (t_max > 0.0):
        raise UsageError("bin width and range must be positive")
    k = int(math.ceil(t_max / bin_width))
    idx = np.floor(gl.gaps / bin_width).astype(np.int64)
    in_range = gl.gaps < t_max
    counts = np.bincount(idx[in_range], minlength=k)[:k]
    return SpacingHistogram(
        bin_width=bin_width,
        t_max=t_max,
        counts=counts.astype(np.int64),
        overflow=int((~in_range).sum()),
        total=len(gl.gaps),
        metadata=dict(metadata or {}),
    )


def merge_histograms(a: SpacingHistogram, b: SpacingHistogram) -> SpacingHistogram:
    if a.bin_width != b.bin_width or a.t_max != b.t_max:
        raise UsageError("histograms with different binning cannot be merged")
    return SpacingHistogram(
        bin_width=a.bin_width,
        t_max=a.t_max,
        counts=a.counts + b.counts,
        overflow=a.overflow + b.overflow,
        total=a.total + b.total,
        metadata={**a.metadata, **b.metadata},
    )


def run_pipeline(points: PointSet, method: str = "auto", spec=None,
                 include_wraparound: bool = False, bin_width: float = 0.01,
                 t_max: float = 4.0):
    """generate -> visible -> project -> normalize -> histogram, plus a summary."""
    from .visibility import visible

    vis = visible(points, method=method, spec=spec)
    profile = project_angles(vis)
    gl = normalized_gaps(profile, include_wraparound=include_wraparound)
    hist = histogram(gl, bin_width=bin_width, t_max=t_max,
                     metadata={"source": vis.provenance})
    summary = {
        "n_points": len(points),
        "n_visible": len(vis),
        "n_angles": profile.n,
        "n_gaps": len(gl),
        "min_gap": float(gl.gaps.min()),
        "max_gap": float(gl.gaps.max()),
        "mean_gap": float(gl.gaps.mean()),
        "in_range_fraction": hist.in_range_fraction(),
        "overflow": hist.overflow,
        "include_wraparound": include_wraparound,
        "bin_width": bin_width,
        "t_max": t_max,
        "provenance": vis.provenance,
    }
    return hist, gl, summary
