"""Reference densities, gap-size estimation, tail fits and histogram metrics.

The integer-lattice spacing density is the classical three-branch closed
form with branch points 3/pi^2 and 12/pi^2; its tail admits the two-term
expansion g(1/t) = (36/pi^4) t^3 + (162/pi^6) t^4 + O(t^5), whose
coefficients the power-law fit recovers from histogram data.  The Poisson
reference is the unit exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import UsageError
from .pipeline import GapList, SpacingHistogram

__all__ = [
    "T_GAP",
    "T_KNEE",
    "C3",
    "C4",
    "lattice_gap_density",
    "lattice_tail_density",
    "exponential_density",
    "exponential_cdf",
    "lattice_gap_cdf",
    "gap_size",
    "TailFit",
    "tail_fit",
    "tail_fit_from_bins",
    "CompareMetrics",
    "compare",
]

T_GAP = 3.0 / math.pi**2     # support starts here: no smaller gap occurs
T_KNEE = 12.0 / math.pi**2   # second branch point
C3 = 36.0 / math.pi**4
C4 = 162.0 / math.pi**6


def _g_scalar(t: float) -> float:
    if t <= T_GAP:
        return 0.0
    if t <= T_KNEE:
        return 6.0 / (math.pi**2 * t * t) * math.log(math.pi**2 * t / 3.0)
    # Stable form of log(2 / (1 + sqrt(1 - u))) with u = 12/(pi^2 t):
    # the argument is rewritten so neither u -> 1 nor u -> 0 cancels.
    u = T_KNEE / t
    s = math.sqrt((t - T_KNEE) / t)
    val = -math.log1p(-u / (2.0 * (1.0 + s)))
    return 12.0 / (math.pi**2 * t * t) * val


def lattice_gap_density(t) -> np.ndarray | float:
    """Limiting spacing density of the visible lattice points of Z^2."""
    if np.isscalar(t):
        if t <= 0.0:
            raise UsageError("the density is defined for t > 0")
        return _g_scalar(float(t))
    t = np.asarray(t, dtype=float)
    if (t <= 0.0).any():
        raise UsageError("the density is defined for t > 0")
    out = np.zeros(t.shape, dtype=float)
    mid = (t > T_GAP) & (t <= T_KNEE)
    tm = t[mid]
    out[mid] = 6.0 / (math.pi**2 * tm * tm) * np.log(math.pi**2 * tm / 3.0)
    hi = t > T_KNEE
    th = t[hi]
    u = T_KNEE / th
    s = np.sqrt((th - T_KNEE) / th)
    out[hi] = 12.0 / (math.pi**2 * th * th) * (-np.log1p(-u / (2.0 * (1.0 + s))))
    return out


def lattice_tail_density(t) -> np.ndarray | float:
    """Two-term tail expansion: g(1/t) ~ C3*t^3 + C4*t^4 for small t."""
    t = np.asarray(t, dtype=float) if not np.isscalar(t) else float(t)
    return C3 * t**3 + C4 * t**4


def exponential_density(lam: float, x) -> np.ndarray | float:
    if not (lam > 0.0):
        raise UsageError("rate must be positive")
    if np.isscalar(x):
        return lam * math.exp(-lam * x) if x >= 0.0 else 0.0
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0.0, lam * np.exp(-lam * x), 0.0)


def exponential_cdf(lam: float, x) -> np.ndarray | float:
    if not (lam > 0.0):
        raise UsageError("rate must be positive")
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 0.0, -np.expm1(-lam * x), 0.0)
    return float(out) if out.ndim == 0 else out


def lattice_gap_cdf(x) -> np.ndarray | float:
    """CDF of the lattice spacing density via a dense cached grid."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    hi = float(x.max())
    grid, cum = _lattice_cdf_grid(hi)
    out = np.interp(x, grid, cum, left=0.0)
    return float(out[0]) if out.size == 1 else out


_CDF_CACHE: dict = {}


def _lattice_cdf_grid(hi: float):
    """Piecewise grid split at the branch points; the square-root cusp right
    of the knee is integrated in the substituted variable u = sqrt(t - knee)
    so trapezoidal accuracy stays near 1e-8 overall."""
    hi = max(hi, T_KNEE * 4.0)
    key = round(hi, 9)
    if key in _CDF_CACHE:
        return _CDF_CACHE[key]
    cusp_end = T_KNEE + 0.25
    t1 = np.linspace(T_GAP, T_KNEE, 8193)
    u = np.linspace(0.0, math.sqrt(cusp_end - T_KNEE), 4097)
    t2 = T_KNEE + u * u
    t3 = np.geomspace(cusp_end, hi, 16385)
    g1 = lattice_gap_density(t1)
    c1 = integrate.cumulative_trapezoid(g1, t1, initial=0.0)
    # dt = 2 u du, and g stays bounded, so g*2u is smooth in u
    g2 = lattice_gap_density(np.maximum(t2, T_KNEE * (1 + 1e-15))) * 2.0 * u
    c2 = integrate.cumulative_trapezoid(g2, u, initial=0.0) + c1[-1]
    g3 = lattice_gap_density(t3)
    c3 = integrate.cumulative_trapezoid(g3, t3, initial=0.0) + c2[-1]
    grid = np.concatenate((t1, t2[1:], t3[1:]))
    cum = np.concatenate((c1, c2[1:], c3[1:]))
    _CDF_CACHE[key] = (grid, cum)
    return _CDF_CACHE[key]


def gap_size(gl: GapList) -> float:
    """Empirical infimum of the support: the minimum normalized gap."""
    if len(gl) == 0:
        raise UsageError("empty gap list")
    return float(gl.gaps.min())


@dataclass(frozen=True)
class TailFit:
    c3: float
    c4: float
    residual: float
    fit_range: tuple[float, float]
    sample_count: int
    bins: int
    c5_nuisance: float = 0.0

    def as_dict(self) -> dict:
        return {
            "c3": self.c3,
            "c4": self.c4,
            "residual": self.residual,
            "fit_range": list(self.fit_range),
            "sample_count": self.sample_count,
            "bins": self.bins,
            "c5_nuisance": self.c5_nuisance,
        }


def _binned_design(lo: np.ndarray, hi: np.ndarray):
    """Bin averages of d^-3, d^-4, d^-5 (the t^3..t^5 tail basis at t = 1/d).

    The t^5 column is a nuisance order: without it the truncation error of
    the two-term expansion biases the t^4 coefficient by several percent at
    the typical fit ranges.
    """
    w = hi - lo
    cols = []
    for k in (3, 4, 5):
        cols.append((lo ** (1 - k) - hi ** (1 - k)) / ((k - 1) * w))
    return np.column_stack(cols)


def tail_fit_from_bins(edges: np.ndarray, densities: np.ndarray,
                       weights: np.ndarray | None = None,
                       sample_count: int = 0) -> TailFit:
    """Weighted least squares of bin densities against the tail model.

    The coefficients are constrained nonnegative: the known expansion orders
    are all positive, and without the constraint the nearly collinear t^4
    and t^5 columns let sampling noise drive the fit to wild cancelling
    coefficient pairs.
    """
    edges = np.asarray(edges, dtype=float)
    densities = np.asarray(densities, dtype=float)
    lo, hi = edges[:-1], edges[1:]
    if len(densities) != len(lo) or len(densities) < 3:
        raise UsageError("need at least three bins for the tail fit")
    design = _binned_design(lo, hi)
    w = np.ones(len(densities)) if weights is None else np.asarray(weights, dtype=float)
    sw = np.sqrt(w)
    coef, _ = optimize.nnls(design * sw[:, None], densities * sw)
    resid = float(((design @ coef - densities) ** 2 * w).sum())
    return TailFit(
        c3=float(coef[0]),
        c4=float(coef[1]),
        residual=resid,
        fit_range=(float(edges[0]), float(edges[-1])),
        sample_count=sample_count,
        bins=len(densities),
        c5_nuisance=float(coef[2]),
    )


def tail_fit(gl: GapList, d_lo: float = 5.0, d_hi: float = 50.0,
             min_bin_count: int = 50) -> TailFit:
    """Fit the tail coefficients from raw gaps on [d_lo, d_hi].

    Tail gaps are grouped into equal-count bins (>= min_bin_count each) so
    the least-squares weights stay meaningful deep in the tail, converted to
    density estimates against the full sample size, and regressed on the
    exact bin averages of d^-3 and d^-4.
    """
    if not (0.0 < d_lo < d_hi):
        raise UsageError("need 0 < d_lo < d_hi")
    gaps = gl.gaps
    sel = np.sort(gaps[(gaps >= d_lo) & (gaps <= d_hi)])
    if len(sel) < 100:
        raise UsageError(
            f"only {len(sel)} gaps in [{d_lo}, {d_hi}]; at least 100 required"
        )
    nbins = max(2, min(len(sel) // min_bin_count, 400))
    cuts = np.linspace(0, len(sel), nbins + 1).astype(int)
    edges = [d_lo]
    counts = []
    for i in range(nbins):
        a, b = cuts[i], cuts[i + 1]
        right = float(sel[b - 1]) if b == len(sel) else float(0.5 * (sel[b - 1] + sel[b]))
        if right <= edges[-1]:
            continue
        edges.append(right)
        counts.append(b - a if not counts else b - cuts[i])
    # Recompute counts exactly against the final edge set.
    edges = np.asarray(edges)
    counts = np.histogram(sel, bins=edges)[0]
    keep = counts > 0
    if keep.sum() < 3:
        raise UsageError("tail sample too degenerate for the tail fit")
    widths = np.diff(edges)
    dens = counts / (len(gaps) * widths)
    # Drop empty bins by merging their edges away.
    idx = np.nonzero(keep)[0]
    edges_kept = np.append(edges[:-1][idx], edges[idx[-1] + 1])
    fit = tail_fit_from_bins(edges_kept, dens[idx], weights=counts[idx],
                             sample_count=len(sel))
    return fit


@dataclass(frozen=True)
class CompareMetrics:
    """Distances between a binned empirical distribution and a reference density.

    ``l1`` sums |bin probability - reference bin mass| over the histogram
    range; ``tv`` is the total-variation convention (half of it).  ``sup``
    is the largest per-bin deviation in density units, ``ks`` the largest
    CDF gap across bin edges.
    """

    l1: float
    sup: float
    ks: float

    @property
    def tv(self) -> float:
        return 0.5 * self.l1

    def as_dict(self) -> dict:
        return {"l1": self.l1, "tv": self.tv, "sup": self.sup, "ks": self.ks}


def _gauss_masses(density, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    nodes, weights = np.polynomial.legendre.leggauss(12)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * nodes[None, :]
    vals = np.asarray(density(np.maximum(x.ravel(), 1e-300))).reshape(x.shape)
    return (vals * weights[None, :]).sum(axis=1) * half


def _bin_masses(density, edges: np.ndarray,
                breakpoints: tuple = (T_GAP, T_KNEE)) -> np.ndarray:
    """Reference probability mass per bin by Gauss-Legendre quadrature.

    Bins containing a breakpoint (a jump or cusp of the reference density)
    are split there first, otherwise polynomial quadrature degrades badly
    on exactly those bins.
    """
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1], edges[1:]
    masses = np.zeros(len(lo))
    plain = np.ones(len(lo), dtype=bool)
    for bp in breakpoints:
        split = (lo < bp) & (bp < hi)
        for i in np.nonzero(split)[0]:
            masses[i] += (_gauss_masses(density, np.array([lo[i]]), np.array([bp]))[0]
                          + _gauss_masses(density, np.array([bp]), np.array([hi[i]]))[0])
        plain &= ~split
    if plain.any():
        masses[plain] = _gauss_masses(density, lo[plain], hi[plain])
    return masses


def compare(hist: SpacingHistogram, density,
            breakpoints: tuple = (T_GAP, T_KNEE)) -> CompareMetrics:
    """L1 distance, sup bin deviation (density units) and edge-KS vs a reference."""
    edges = hist.edges
    ref_mass = _bin_masses(density, edges, breakpoints)
    emp_mass = hist.counts / hist.total if hist.total else np.zeros(len(hist.counts))
    l1 = float(np.abs(emp_mass - ref_mass).sum())
    sup = float(np.abs(emp_mass - ref_mass).max() / hist.bin_width)
    emp_cdf = np.concatenate(([0.0], np.cumsum(emp_mass)))
    ref_cdf = np.concatenate(([0.0], np.cumsum(ref_mass)))
    ks = float(np.abs(emp_cdf - ref_cdf).max())
    return CompareMetrics(l1=l1, sup=sup, ks=ks)
