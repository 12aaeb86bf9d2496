"""Tests for weight histograms, binning, power-law fits and verdicts."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import DegenerateX, DomainError, EmptyNetwork, InsufficientData
from src.network import distfit, odnet
from src.network.distfit import BinnedDistribution, BinningScheme, PowerLawFit, Verdict, WeightDistribution
from src.network.odnet import ZonedTrip

FORTALEZA_EXPONENT = 2.5176


def histogram_of(samples: np.ndarray) -> WeightDistribution:
    values, counts = np.unique(samples, return_counts=True)
    return WeightDistribution(values, counts)


def exact_power_law(last_weight: int, exponent: float = 2.0) -> WeightDistribution:
    weights = np.arange(1, last_weight + 1)
    counts = np.rint(1e9 * weights.astype(float) ** -exponent).astype(np.int64)
    return WeightDistribution(weights, counts)


def points(centers, densities) -> BinnedDistribution:
    return BinnedDistribution(
        centers=np.asarray(centers, dtype=float),
        densities=np.asarray(densities, dtype=float),
        widths=np.ones(len(centers)),
        scheme=BinningScheme(distfit.LINEAR),
    )


def fit_with(decades: float, r_squared: float) -> PowerLawFit:
    return PowerLawFit(
        alpha=-2.0, logA=0.0, r_squared=r_squared, decades_spanned=decades,
        n_points=10, binning=BinningScheme(distfit.LOGARITHMIC, 5),
    )


# ============================================================================
# HISTOGRAM
# ============================================================================

def test_histogram_examples():
    net = odnet.build_network([ZonedTrip("A", "B", 3), ZonedTrip("B", "A", 1)])
    assert distfit.weight_histogram(net).as_pairs() == [(1, 1), (3, 1)]

    complete = odnet.network_from_edges([(o, d, 2) for o in "ABC" for d in "ABC" if o != d])
    histogram = distfit.weight_histogram(complete)
    assert histogram.as_pairs() == [(2, 6)]
    assert histogram.total == 6


def test_histogram_includes_self_loops():
    net = odnet.build_network([ZonedTrip("A", "A", 4), ZonedTrip("A", "B", 1)])
    assert distfit.weight_histogram(net).as_pairs() == [(1, 1), (4, 1)]


def test_histogram_of_edgeless_network():
    with pytest.raises(EmptyNetwork):
        distfit.weight_histogram(odnet.build_network([]))


@pytest.mark.parametrize("weights, counts", [([2, 1], [1, 1]), ([0, 1], [1, 1]), ([1, 2], [1, 0]), ([1], [1, 2])])
def test_weight_distribution_invariants(weights, counts):
    with pytest.raises(DomainError):
        WeightDistribution(weights, counts)


# ============================================================================
# BINNING
# ============================================================================

def test_single_weight_is_one_bin():
    binned = distfit.log_bin(WeightDistribution([7], [12]))
    assert len(binned) == 1
    assert binned.normalization == pytest.approx(1.0, abs=1e-12)


def test_integer_aware_widths():
    binned = distfit.log_bin(WeightDistribution(np.arange(1, 11), np.ones(10)), bins_per_decade=1)
    assert binned.widths.tolist() == [9.0, 1.0]
    assert binned.centers == pytest.approx([3.0, 10.0])
    assert binned.densities == pytest.approx([9 / (10 * 9), 1 / 10])

    wide = distfit.log_bin(WeightDistribution([1, 10, 99], [1, 1, 1]), bins_per_decade=1)
    assert wide.widths.tolist() == [9.0, 90.0]
    assert wide.centers == pytest.approx([3.0, math.sqrt(10 * 99)])


def test_uniform_weights_give_flat_density():
    binned = distfit.log_bin(WeightDistribution(np.arange(1, 1001), np.full(1000, 7)), bins_per_decade=5)
    assert binned.densities == pytest.approx(np.full(len(binned), 1 / 1000), rel=1e-9)


def test_sampled_uniform_weights_flat_within_noise(rng):
    binned = distfit.log_bin(histogram_of(rng.integers(1, 1001, 1_000_000)), bins_per_decade=5)
    assert binned.densities == pytest.approx(np.full(len(binned), 1 / 1000), rel=0.15)


def test_empty_bins_omitted():
    binned = distfit.log_bin(WeightDistribution([1, 1000], [5, 5]), bins_per_decade=5)
    assert len(binned) == 2
    assert np.all(binned.densities > 0)


@pytest.mark.parametrize("bins_per_decade", [0, -3, 2.5])
def test_bins_per_decade_domain(bins_per_decade):
    with pytest.raises(DomainError):
        distfit.log_bin(WeightDistribution([1, 2], [1, 1]), bins_per_decade)


def test_linear_binning_is_the_raw_pmf():
    dist = WeightDistribution([1, 2, 5], [6, 3, 1])
    binned = distfit.bin_distribution(dist, "linear")
    assert binned.centers.tolist() == [1.0, 2.0, 5.0]
    assert binned.densities == pytest.approx([0.6, 0.3, 0.1])
    assert binned.scheme.describe() == {"kind": "linear", "bins_per_decade": None}
    with pytest.raises(DomainError):
        distfit.bin_distribution(dist, "quantile")


@settings(max_examples=300, deadline=None)
@given(
    st.dictionaries(st.integers(min_value=1, max_value=100_000), st.integers(min_value=1, max_value=10_000),
                    min_size=1, max_size=50),
    st.integers(min_value=1, max_value=10),
)
def test_binning_normalizes(histogram, bins_per_decade):
    weights = sorted(histogram)
    dist = WeightDistribution(weights, [histogram[w] for w in weights])
    assert dist.total == sum(histogram.values())
    binned = distfit.log_bin(dist, bins_per_decade)
    assert binned.normalization == pytest.approx(1.0, abs=1e-9)
    assert np.all(binned.densities > 0)
    assert np.all(np.diff(binned.centers) > 0)


def test_common_divisor_sets_the_width_unit():
    binned = distfit.log_bin(WeightDistribution([7, 70, 693], [1, 1, 1]), bins_per_decade=1)
    assert binned.widths.tolist() == [63.0, 630.0]
    assert binned.centers == pytest.approx([7 * 3.0, 7 * math.sqrt(10 * 99)])
    assert binned.normalization == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("factor", [7, 3, 1000])
def test_rebinning_scaled_power_law_keeps_exponent(factor):
    dist = exact_power_law(10_000)
    scaled = WeightDistribution(dist.weights * factor, dist.counts)
    fit = distfit.fit_power_law(distfit.log_bin(dist))
    rescaled = distfit.fit_power_law(distfit.log_bin(scaled))
    assert rescaled.alpha == pytest.approx(fit.alpha, abs=1e-9)
    assert rescaled.decades_spanned == pytest.approx(fit.decades_spanned, abs=1e-9)
    assert rescaled.logA != pytest.approx(fit.logA)


@settings(max_examples=200, deadline=None)
@given(
    st.dictionaries(st.integers(min_value=1, max_value=100_000), st.integers(min_value=1, max_value=10_000),
                    min_size=3, max_size=40),
    st.integers(min_value=2, max_value=500),
    st.integers(min_value=1, max_value=10),
)
def test_rebinning_scaled_weights(histogram, factor, bins_per_decade):
    weights = sorted(histogram)
    dist = WeightDistribution(weights, [histogram[w] for w in weights])
    scaled = WeightDistribution(np.array(weights) * factor, [histogram[w] for w in weights])
    binned = distfit.log_bin(dist, bins_per_decade)
    rebinned = distfit.log_bin(scaled, bins_per_decade)

    assert len(rebinned) == len(binned)
    assert rebinned.centers == pytest.approx(binned.centers * factor, rel=1e-12)
    assert rebinned.densities * factor == pytest.approx(binned.densities, rel=1e-12)
    if len(binned) >= 3:
        fit = distfit.fit_power_law(binned)
        assert distfit.fit_power_law(rebinned).alpha == pytest.approx(fit.alpha, abs=1e-9)


# ============================================================================
# FITTING
# ============================================================================

def test_noiseless_power_law():
    x = np.array([1.0, 10.0, 100.0, 1000.0])
    fit = distfit.fit_power_law(points(x, x ** -2.0))
    assert fit.alpha == pytest.approx(-2.0, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.decades_spanned == pytest.approx(3.0)
    assert fit.n_points == 4
    assert fit.prefactor == pytest.approx(1.0)


def test_flat_density_has_zero_slope():
    fit = distfit.fit_power_law(points([1, 10, 100, 1000], [0.25] * 4))
    assert fit.alpha == pytest.approx(0.0, abs=1e-12)
    assert fit.r_squared == 0.0


def test_insufficient_and_degenerate_data():
    with pytest.raises(InsufficientData):
        distfit.fit_power_law(points([1, 10], [0.5, 0.05]))
    with pytest.raises(InsufficientData):
        distfit.fit_power_law(points([1, 10, 100], [0.5, 0.0, 0.01]))
    with pytest.raises(DegenerateX):
        distfit.fit_power_law(points([5, 5, 5], [0.1, 0.2, 0.3]))


@settings(max_examples=200, deadline=None)
@given(
    alpha=st.floats(min_value=-4.0, max_value=-0.5),
    log_a=st.floats(min_value=-3.0, max_value=3.0),
    scale=st.floats(min_value=0.01, max_value=100.0),
)
def test_slope_recovery_and_scale_invariance(alpha, log_a, scale):
    x = np.logspace(0, 4, 13)
    fit = distfit.fit_power_law(points(x, 10 ** log_a * x ** alpha))
    assert fit.alpha == pytest.approx(alpha, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-9)

    shifted = distfit.fit_power_law(points(x * scale, 10 ** log_a * x ** alpha))
    assert shifted.alpha == pytest.approx(alpha, abs=1e-9)


def test_power_law_recovery_at_fortaleza_exponent(rng):
    samples = distfit.sample_discrete_power_law(FORTALEZA_EXPONENT, 100_000, rng)
    fit = distfit.fit_power_law(distfit.log_bin(histogram_of(samples), bins_per_decade=5))
    assert fit.alpha == pytest.approx(-FORTALEZA_EXPONENT, abs=0.15)
    assert fit.r_squared >= 0.95


def test_fit_is_deterministic(rng):
    binned = distfit.log_bin(histogram_of(distfit.sample_discrete_power_law(2.2, 20_000, rng)))
    assert distfit.fit_power_law(binned) == distfit.fit_power_law(binned)


# ============================================================================
# VERDICT
# ============================================================================

@pytest.mark.parametrize("decades, r_squared, verdict", [
    (2.0, 0.99, Verdict.INSUFFICIENT_SPAN),
    (3.5, 0.97, Verdict.PLAUSIBLE),
    (4.0, 0.5, Verdict.POOR_FIT),
    (2.0, 0.5, Verdict.INSUFFICIENT_SPAN),
])
def test_verdict_examples(decades, r_squared, verdict):
    assert distfit.scale_free_verdict(fit_with(decades, r_squared)) == verdict


def test_verdict_thresholds_configurable():
    fit = fit_with(2.5, 0.85)
    assert distfit.scale_free_verdict(fit, min_decades=2.0, min_r_squared=0.8) == Verdict.PLAUSIBLE
    assert distfit.scale_free_verdict(fit, min_decades=2.0) == Verdict.POOR_FIT


def test_span_rejection_truncated_then_extended():
    truncated = distfit.fit_power_law(distfit.log_bin(exact_power_law(100)))
    assert truncated.decades_spanned < 3.0
    assert distfit.scale_free_verdict(truncated) == Verdict.INSUFFICIENT_SPAN

    extended = distfit.fit_power_law(distfit.log_bin(exact_power_law(10_000)))
    assert extended.decades_spanned > 3.0
    assert distfit.scale_free_verdict(extended) == Verdict.PLAUSIBLE


# ============================================================================
# SAMPLING
# ============================================================================

def test_sampler_support_and_seed():
    first = distfit.sample_discrete_power_law(2.0, 5000, np.random.default_rng(7), x_min=3, x_max=50)
    second = distfit.sample_discrete_power_law(2.0, 5000, np.random.default_rng(7), x_min=3, x_max=50)
    assert np.array_equal(first, second)
    assert first.min() >= 3 and first.max() <= 50


def test_sampler_probabilities(rng):
    samples = distfit.sample_discrete_power_law(2.0, 200_000, rng, x_max=1000)
    norm = np.sum(np.arange(1, 1001, dtype=float) ** -2.0)
    assert np.mean(samples == 1) == pytest.approx(1 / norm, rel=0.02)
    assert np.mean(samples == 2) == pytest.approx(0.25 / norm, rel=0.05)


@pytest.mark.parametrize("kwargs", [
    {"exponent": 0.0, "size": 10},
    {"exponent": 2.0, "size": -1},
    {"exponent": 2.0, "size": 10, "x_min": 0},
    {"exponent": 2.0, "size": 10, "x_min": 10, "x_max": 5},
])
def test_sampler_domain(kwargs, rng):
    with pytest.raises(DomainError):
        distfit.sample_discrete_power_law(rng=rng, **kwargs)
