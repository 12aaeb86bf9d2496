"""
Distribution Fitting Module
Edge-weight distributions and the power law y = A * x^alpha fitted by ordinary
least squares in log-log space.

Only linear regression is offered; maximum-likelihood estimation and automated
xmin selection are outside the toolkit.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import stats

from src import config
from src.errors import DegenerateX, DomainError, EmptyNetwork, InsufficientData
from src.network.odnet import OdNetwork

logger = logging.getLogger(__name__)

LOGARITHMIC = "logarithmic"
LINEAR = "linear"


@dataclass(frozen=True, eq=False)
class WeightDistribution:
    """Exact histogram: how many edges carry each weight value."""

    weights: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if weights.shape != counts.shape or weights.ndim != 1:
            raise DomainError("weights and counts must be 1-D arrays of equal length")
        if len(weights) and (np.any(np.diff(weights) <= 0) or weights[0] < 1):
            raise DomainError("weights must be positive and strictly increasing")
        if np.any(counts < 1):
            raise DomainError("counts must be >= 1")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "counts", counts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightDistribution):
            return NotImplemented
        return np.array_equal(self.weights, other.weights) and np.array_equal(self.counts, other.counts)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def total(self) -> int:
        """Number of edges (L)."""
        return int(self.counts.sum())

    @property
    def pdf(self) -> np.ndarray:
        return self.counts / self.total

    def as_pairs(self) -> List[Tuple[int, int]]:
        return [(int(w), int(c)) for w, c in zip(self.weights, self.counts)]


@dataclass(frozen=True)
class BinningScheme:
    kind: str
    bins_per_decade: Optional[int] = None

    def describe(self) -> Dict:
        return {"kind": self.kind, "bins_per_decade": self.bins_per_decade}


@dataclass(frozen=True, eq=False)
class BinnedDistribution:
    """
    Probability density sampled at bin centers.

    For weight histograms the width of a bin is the span of weight values it
    covers (see log_bin), so sum(density * width) == 1.
    """

    centers: np.ndarray
    densities: np.ndarray
    widths: np.ndarray
    scheme: BinningScheme

    def __post_init__(self):
        for name in ("centers", "densities", "widths"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.centers.shape == self.densities.shape == self.widths.shape):
            raise DomainError("centers, densities and widths must have equal length")
        if np.any(self.densities < 0):
            raise DomainError("densities must be >= 0")

    def __len__(self) -> int:
        return len(self.centers)

    @property
    def normalization(self) -> float:
        return float(np.sum(self.densities * self.widths))


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    logA: float
    r_squared: float
    decades_spanned: float
    n_points: int
    binning: BinningScheme

    @property
    def prefactor(self) -> float:
        """A in y = A * x^alpha."""
        return 10.0 ** self.logA

    def to_dict(self) -> Dict:
        return {
            "alpha": self.alpha,
            "logA": self.logA,
            "r_squared": self.r_squared,
            "decades_spanned": self.decades_spanned,
            "n_points": self.n_points,
            "binning": self.binning.describe(),
        }


class Verdict(str, Enum):
    PLAUSIBLE = "plausible"
    INSUFFICIENT_SPAN = "insufficient_span"
    POOR_FIT = "poor_fit"


# ============================================================================
# DISTRIBUTIONS
# ============================================================================

def weight_histogram(net: OdNetwork) -> WeightDistribution:
    """
    Exact multiset histogram of edge weights, self-loops included.

    Raises:
        EmptyNetwork: If the network has no edges
    """
    weights = np.array(net.weights(), dtype=np.int64)
    if len(weights) == 0:
        raise EmptyNetwork("network has no edges")
    values, counts = np.unique(weights, return_counts=True)
    return WeightDistribution(weights=values, counts=counts)


def _check_bins_per_decade(bins_per_decade: int):
    if isinstance(bins_per_decade, bool) or int(bins_per_decade) != bins_per_decade or bins_per_decade < 1:
        raise DomainError(f"bins_per_decade must be an integer >= 1, got {bins_per_decade!r}")


def log_bin(dist: WeightDistribution, bins_per_decade: int = config.DEFAULT_BINS_PER_DECADE) -> BinnedDistribution:
    """
    Geometric binning of a weight histogram.

    Weights are measured in units of their greatest common divisor g. Bin edges
    are w_min * 10^(k / bins_per_decade) and bin k holds the weights in
    [edge_k, edge_k+1). A bin's width is g times the number of multiples of g it
    covers, its center the geometric mean of the smallest and largest such
    multiple; the last bin stops at the largest observed weight. Empty bins are
    omitted. Multiplying every weight by a constant scales centers and widths by
    that constant and leaves the bin counts unchanged.

    Raises:
        DomainError: If bins_per_decade < 1 or the distribution is empty
    """
    _check_bins_per_decade(bins_per_decade)
    if len(dist) == 0:
        raise DomainError("cannot bin an empty distribution")

    unit = int(np.gcd.reduce(dist.weights))
    steps = dist.weights // unit
    u_min = float(steps[0])
    u_max = float(steps[-1])
    n_bins = max(1, math.ceil(math.log10(u_max / u_min) * bins_per_decade))
    edges = u_min * 10.0 ** (np.arange(n_bins + 1) / bins_per_decade)
    if edges[-1] <= u_max:
        edges = np.append(edges, u_min * 10.0 ** ((n_bins + 1) / bins_per_decade))
        n_bins += 1

    bin_of = np.searchsorted(edges, steps, side="right") - 1
    bin_counts = np.zeros(n_bins, dtype=np.int64)
    np.add.at(bin_counts, bin_of, dist.counts)

    low = np.ceil(edges[:-1])
    high = np.minimum(np.ceil(edges[1:]) - 1.0, u_max)
    occupied = bin_counts > 0

    widths = unit * (high - low + 1.0)[occupied]
    centers = unit * np.sqrt(low * high)[occupied]
    densities = bin_counts[occupied] / (dist.total * widths)

    return BinnedDistribution(
        centers=centers,
        densities=densities,
        widths=widths,
        scheme=BinningScheme(LOGARITHMIC, int(bins_per_decade)),
    )


def linear_bin(dist: WeightDistribution) -> BinnedDistribution:
    """Raw probability mass: one unit-width bin per distinct weight."""
    if len(dist) == 0:
        raise DomainError("cannot bin an empty distribution")
    return BinnedDistribution(
        centers=dist.weights.astype(float),
        densities=dist.pdf,
        widths=np.ones(len(dist)),
        scheme=BinningScheme(LINEAR),
    )


def bin_distribution(
    dist: WeightDistribution,
    kind: str = config.DEFAULT_BINNING,
    bins_per_decade: int = config.DEFAULT_BINS_PER_DECADE,
) -> BinnedDistribution:
    if kind == LOGARITHMIC:
        return log_bin(dist, bins_per_decade)
    if kind == LINEAR:
        return linear_bin(dist)
    raise DomainError(f"unknown binning '{kind}' (choose from {', '.join(config.BINNING_KINDS)})")


# ============================================================================
# FITTING
# ============================================================================

def fit_power_law(binned: BinnedDistribution) -> PowerLawFit:
    """
    Least-squares line through (log10 x, log10 p) over bins with p > 0.

    Returns:
        PowerLawFit with alpha = slope and logA = intercept

    Raises:
        InsufficientData: Fewer than three usable bins
        DegenerateX: All usable bin centers are equal
    """
    usable = (binned.densities > 0) & (binned.centers > 0)
    x = binned.centers[usable]
    p = binned.densities[usable]
    if len(x) < config.MIN_FIT_POINTS:
        raise InsufficientData(
            f"{len(x)} usable bin(s); at least {config.MIN_FIT_POINTS} are needed for a fit"
        )

    log_x = np.log10(x)
    log_p = np.log10(p)
    if np.all(log_x == log_x[0]):
        raise DegenerateX("all bin centers are equal")

    regression = stats.linregress(log_x, log_p)
    r_squared = float(regression.rvalue) ** 2
    if not math.isfinite(r_squared):
        r_squared = 0.0

    fit = PowerLawFit(
        alpha=float(regression.slope),
        logA=float(regression.intercept),
        r_squared=min(max(r_squared, 0.0), 1.0),
        decades_spanned=float(np.log10(x.max() / x.min())),
        n_points=int(len(x)),
        binning=binned.scheme,
    )
    logger.info(
        f"Power-law fit: alpha={fit.alpha:.4f} r2={fit.r_squared:.4f} "
        f"decades={fit.decades_spanned:.2f} points={fit.n_points}"
    )
    return fit


def scale_free_verdict(
    fit: PowerLawFit,
    min_decades: float = config.DEFAULT_MIN_DECADES,
    min_r_squared: float = config.DEFAULT_MIN_R_SQUARED,
) -> Verdict:
    """
    Whether a fit supports a scale-free reading.

    A span check comes first: a straight line over too few decades is not
    evidence, whatever its r^2.
    """
    if fit.decades_spanned < min_decades:
        return Verdict.INSUFFICIENT_SPAN
    if fit.r_squared < min_r_squared:
        return Verdict.POOR_FIT
    return Verdict.PLAUSIBLE


# ============================================================================
# SAMPLING
# ============================================================================

def sample_discrete_power_law(
    exponent: float,
    size: int,
    rng: np.random.Generator,
    x_min: int = 1,
    x_max: int = config.POWER_LAW_SUPPORT_MAX,
) -> np.ndarray:
    """
    Draw integers k in [x_min, x_max] with P(k) proportional to k^-exponent.

    Args:
        exponent: Positive decay exponent (2.5 means p(k) ~ k^-2.5)
        size: Number of samples
        rng: Seeded numpy Generator
        x_min: Smallest value
        x_max: Largest value (truncation of the support)
    """
    if exponent <= 0:
        raise DomainError(f"exponent must be positive, got {exponent}")
    if x_min < 1 or x_max < x_min:
        raise DomainError(f"need 1 <= x_min <= x_max, got [{x_min}, {x_max}]")
    if size < 0:
        raise DomainError(f"size must be >= 0, got {size}")

    support = np.arange(x_min, x_max + 1, dtype=np.int64)
    cdf = np.cumsum(support.astype(float) ** -exponent)
    cdf /= cdf[-1]
    picks = np.searchsorted(cdf, rng.random(size), side="right")
    return support[np.minimum(picks, len(support) - 1)]
