"""Tests for network metrics and the published reference rows."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.core import reference
from src.errors import DomainError, EmptyNetwork, ParseError
from src.network import distfit, metrics, odnet
from src.network.metrics import MetricsReport
from src.network.odnet import ZonedTrip


@st.composite
def edge_lists(draw, max_nodes: int = 15):
    """Random weighted edge lists over at most max_nodes nodes, self-loops allowed."""
    n = draw(st.integers(min_value=1, max_value=max_nodes))
    nodes = [f"n{k:02d}" for k in range(n)]
    pairs = draw(st.sets(st.tuples(st.sampled_from(nodes), st.sampled_from(nodes)), min_size=1, max_size=60))
    weights = draw(st.lists(st.integers(min_value=1, max_value=1000), min_size=len(pairs), max_size=len(pairs)))
    return [(o, d, w) for (o, d), w in zip(sorted(pairs), weights)]


def population_cv(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.std() / values.mean())


def test_two_node_example():
    net = odnet.build_network([ZonedTrip("A", "B", 3), ZonedTrip("B", "A", 1)])
    report = metrics.compute_metrics(net)
    assert (report.N, report.L, report.T) == (2, 2, 4)
    assert report.L_over_N == 1.0
    assert report.delta == 2.0
    assert report.F == 2.0
    assert report.K == 2.0
    assert report.W == 2.0
    assert report.cv_flow == 0.0
    assert report.cv_degree == 0.0
    assert report.cv_weight == pytest.approx(0.5)


def test_single_self_loop():
    report = metrics.compute_metrics(odnet.build_network([ZonedTrip("A", "A", 5)]))
    assert (report.N, report.L, report.T) == (1, 1, 5)
    assert report.delta == 0.0
    assert report.W == 5.0


def test_self_loops_excluded_from_connectivity():
    net = odnet.build_network([ZonedTrip("A", "B", 1), ZonedTrip("B", "B", 1), ZonedTrip("A", "A", 1)])
    report = metrics.compute_metrics(net)
    assert report.L == 3
    assert report.delta == pytest.approx(1.0)


def test_empty_network():
    with pytest.raises(EmptyNetwork):
        metrics.compute_metrics(odnet.build_network([]))
    with pytest.raises(EmptyNetwork):
        metrics.compute_metrics(odnet.build_network([], extra_nodes=["A"]))


# ============================================================================
# RATIOS AGAINST THE PUBLISHED TABLE
# ============================================================================

def test_fortaleza_ratios():
    ratios = metrics.derive_ratios(2002, 147517, 270959)
    assert ratios.L_over_N == pytest.approx(73.68, abs=0.01)
    assert ratios.delta == pytest.approx(73.6e-3, abs=0.1e-3)
    assert ratios.K == pytest.approx(147.37, abs=0.01)
    assert ratios.W == pytest.approx(1.84, abs=0.01)


def test_belo_horizonte_ratios():
    ratios = metrics.derive_ratios(1255, 53843, 108093)
    assert ratios.L_over_N == pytest.approx(42.90, abs=0.01)
    assert ratios.K == pytest.approx(85.8, abs=0.1)
    assert ratios.W == pytest.approx(2.01, abs=0.01)
    assert ratios.delta == pytest.approx(68.4e-3, abs=0.2e-3)


def test_sao_paulo_ratios():
    ratios = metrics.derive_ratios(7532, 25387, 31854)
    assert ratios.delta == pytest.approx(0.9e-3, abs=0.05e-3)
    assert ratios.W == pytest.approx(1.25, abs=0.03)


def test_published_inconsistencies_follow_the_formulas():
    # Brazilian F values in the table are 4T/N; the formula gives T/N
    for name in ("belo_horizonte", "fortaleza"):
        row = reference.reference_report(name)
        ratios = metrics.derive_ratios(row.N, row.L, row.T)
        assert ratios.F == pytest.approx(row.T / row.N)
        assert 4 * ratios.F == pytest.approx(row.F, abs=0.1)

    # Sao Paulo L/N from its own N and L is 3.371, the table prints 3.318
    sao_paulo = reference.reference_report("Sao Paulo")
    assert metrics.derive_ratios(sao_paulo.N, sao_paulo.L, sao_paulo.T).L_over_N == pytest.approx(3.371, abs=0.001)
    assert sao_paulo.L_over_N == 3.318


def test_trivial_ratios():
    assert tuple(metrics.derive_ratios(2, 2, 2)) == (1.0, 2.0, 1.0, 2.0, 1.0)


@pytest.mark.parametrize("counts", [(1, 1, 1), (2, 0, 0), (3, 5, 4)])
def test_derive_ratios_preconditions(counts):
    with pytest.raises(DomainError):
        metrics.derive_ratios(*counts)


def test_unknown_reference_city():
    with pytest.raises(DomainError):
        reference.reference_report("Recife")
    assert reference.reference_names() == ["belo_horizonte", "chicago", "fortaleza", "melbourne", "sao_paulo"]


# ============================================================================
# COEFFICIENT OF VARIATION
# ============================================================================

def test_cv_examples():
    assert metrics.coefficient_of_variation([5, 5, 5]) == 0.0
    assert metrics.coefficient_of_variation([0, 10]) == 1.0


@pytest.mark.parametrize("values", [[], [0, 0], [1, -1, 3]])
def test_cv_domain(values):
    with pytest.raises(DomainError):
        metrics.coefficient_of_variation(values)


def test_cv_matches_uniform_distribution(rng):
    samples = rng.uniform(0.0, 1.0, 10_000)
    analytic = (1.0 / math.sqrt(12.0)) / 0.5
    assert metrics.coefficient_of_variation(samples) == pytest.approx(analytic, rel=0.02)


# ============================================================================
# REPORT SERIALIZATION
# ============================================================================

def test_report_dict_round_trip():
    report = reference.reference_report("fortaleza")
    data = report.to_dict()
    assert list(data) == ["N", "L", "T", "L_over_N", "delta", "F", "K", "W", "cv_flow", "cv_degree", "cv_weight"]
    assert MetricsReport.from_dict(data) == report


def test_report_from_dict_errors():
    data = reference.reference_report("chicago").to_dict()
    del data["W"]
    with pytest.raises(ParseError, match="W"):
        MetricsReport.from_dict(data)
    data = reference.reference_report("chicago").to_dict()
    data["T"] = "many"
    with pytest.raises(ParseError):
        MetricsReport.from_dict(data)


# ============================================================================
# ORACLES AND IDENTITIES
# ============================================================================

@settings(max_examples=50, deadline=None)
@given(edge_lists())
def test_matches_brute_force(edges):
    net = odnet.network_from_edges(edges)
    report = metrics.compute_metrics(net)

    nodes = sorted({o for o, _, _ in edges} | {d for _, d, _ in edges})
    n, l, t = len(nodes), len(edges), sum(w for _, _, w in edges)
    non_loop = sum(1 for o, d, _ in edges if o != d)
    flow = [sum(w for o, d, w in edges if o == v) + sum(w for o, d, w in edges if d == v) for v in nodes]
    degree = [sum(1 for o, _, _ in edges if o == v) + sum(1 for _, d, _ in edges if d == v) for v in nodes]

    assert (report.N, report.L, report.T) == (n, l, t)
    assert report.L_over_N == pytest.approx(l / n, abs=1e-12)
    assert report.delta == pytest.approx(2 * non_loop / (n * (n - 1)) if n > 1 else 0.0, abs=1e-12)
    assert report.F == pytest.approx(t / n, abs=1e-12)
    assert report.K == pytest.approx(2 * l / n, abs=1e-12)
    assert report.W == pytest.approx(t / l, abs=1e-12)
    assert report.cv_flow == pytest.approx(population_cv(flow), abs=1e-12)
    assert report.cv_degree == pytest.approx(population_cv(degree), abs=1e-12)
    assert report.cv_weight == pytest.approx(population_cv([w for _, _, w in edges]), abs=1e-12)

    for v in nodes:
        profile = odnet.degree_profile(net, v)
        assert profile.k_out == sum(1 for o, _, _ in edges if o == v)
        assert profile.k_in == sum(1 for _, d, _ in edges if d == v)
        assert profile.strength_out == sum(w for o, _, w in edges if o == v)
        assert profile.strength_in == sum(w for _, d, w in edges if d == v)

    histogram = distfit.weight_histogram(net)
    values, counts = np.unique([w for _, _, w in edges], return_counts=True)
    assert histogram.weights.tolist() == values.tolist()
    assert histogram.counts.tolist() == counts.tolist()


@settings(max_examples=1000, deadline=None)
@given(edge_lists())
def test_identities(edges):
    net = odnet.network_from_edges(edges)
    report = metrics.compute_metrics(net)
    assert report.W * report.L == pytest.approx(report.T, rel=1e-12)
    assert report.K * report.N == pytest.approx(2 * report.L, rel=1e-12)
    assert report.F * report.N == pytest.approx(report.T, rel=1e-12)
    profiles = net.profiles().values()
    assert sum(p.strength_in for p in profiles) == report.T
    assert sum(p.strength_out for p in profiles) == report.T
    assert 0.0 <= report.delta <= 2.0


@settings(max_examples=100, deadline=None)
@given(edge_lists(), st.integers(min_value=2, max_value=7))
def test_weight_scaling(edges, c):
    base = metrics.compute_metrics(odnet.network_from_edges(edges))
    scaled = metrics.compute_metrics(odnet.network_from_edges([(o, d, w * c) for o, d, w in edges]))
    assert (scaled.N, scaled.L, scaled.T) == (base.N, base.L, base.T * c)
    assert scaled.W == pytest.approx(base.W * c)
    assert scaled.F == pytest.approx(base.F * c)
    assert (scaled.L_over_N, scaled.delta, scaled.K, scaled.cv_degree) == (base.L_over_N, base.delta, base.K, base.cv_degree)
    assert scaled.cv_flow == pytest.approx(base.cv_flow, abs=1e-12)
    assert scaled.cv_weight == pytest.approx(base.cv_weight, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(edge_lists())
def test_relabeling_invariance(edges):
    relabel = {f"n{k:02d}": f"zone-{99 - k}" for k in range(15)}
    base = metrics.compute_metrics(odnet.network_from_edges(edges))
    renamed = metrics.compute_metrics(odnet.network_from_edges([(relabel[o], relabel[d], w) for o, d, w in edges]))
    assert renamed.to_dict() == pytest.approx(base.to_dict())


def test_complete_directed_graph_has_delta_two():
    nodes = "ABCD"
    net = odnet.network_from_edges([(o, d, 1) for o in nodes for d in nodes if o != d])
    assert metrics.compute_metrics(net).delta == pytest.approx(2.0)
