"""
Metrics Module
Structural properties of an OD network used for city comparison.

Conventions:
- delta = 2 * L_nonloop / (N * (N - 1))   (connectivity index, 0 when N < 2)
- K     = 2 * L / N                       (mean total degree)
- F     = T / N                           (mean flow per node)
- W     = T / L                           (mean edge weight)
- CV    = population standard deviation / mean
"""

import logging
import math
from dataclasses import asdict, dataclass, fields
from typing import Dict, Iterable, Mapping, NamedTuple

from src.errors import DomainError, EmptyNetwork, ParseError
from src.network.odnet import OdNetwork

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricsReport:
    """The eleven structural properties of one network."""

    N: int
    L: int
    T: int
    L_over_N: float
    delta: float
    F: float
    K: float
    W: float
    cv_flow: float
    cv_degree: float
    cv_weight: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "MetricsReport":
        names = [f.name for f in fields(cls)]
        missing = [name for name in names if name not in data]
        if missing:
            raise ParseError(f"metrics report lacks field(s): {', '.join(missing)}")
        values = {}
        for f in fields(cls):
            value = data[f.name]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ParseError(f"metrics field '{f.name}' must be a number, got {value!r}")
            values[f.name] = int(value) if f.type is int else float(value)
        return cls(**values)

    def axis(self, name: str) -> float:
        return float(getattr(self, name))


class Ratios(NamedTuple):
    L_over_N: float
    delta: float
    F: float
    K: float
    W: float


def coefficient_of_variation(values: Iterable[float]) -> float:
    """
    Population standard deviation divided by the mean.

    Sums are compensated (math.fsum), so the result does not depend on
    summation order.

    Raises:
        DomainError: If values is empty, has a negative entry or has zero mean
    """
    values = [float(v) for v in values]
    if not values:
        raise DomainError("coefficient of variation of an empty list")
    if any(v < 0 for v in values):
        raise DomainError("coefficient of variation needs non-negative values")

    mean = math.fsum(values) / len(values)
    if mean == 0:
        raise DomainError("coefficient of variation undefined for zero mean")
    variance = math.fsum((v - mean) ** 2 for v in values) / len(values)
    return math.sqrt(variance) / mean


def _connectivity(nodes: int, non_loop_edges: int) -> float:
    if nodes < 2:
        return 0.0
    return 2.0 * non_loop_edges / (nodes * (nodes - 1))


def derive_ratios(N: int, L: int, T: int) -> Ratios:
    """
    Ratios from the three counts, treating every edge as a non-loop edge.

    Raises:
        DomainError: Unless N >= 2, L >= 1 and T >= L
    """
    if N < 2 or L < 1 or T < L:
        raise DomainError(f"derive_ratios needs N >= 2, L >= 1, T >= L (got N={N}, L={L}, T={T})")
    return Ratios(
        L_over_N=L / N,
        delta=_connectivity(N, L),
        F=T / N,
        K=2.0 * L / N,
        W=T / L,
    )


def compute_metrics(net: OdNetwork) -> MetricsReport:
    """
    Compute the metrics report of a network.

    Raises:
        EmptyNetwork: If the network has no nodes or no edges
    """
    n = net.number_of_nodes
    if n == 0:
        raise EmptyNetwork("cannot compute metrics of an empty network")
    l = net.number_of_edges
    if l == 0:
        raise EmptyNetwork(f"network has {n} node(s) but no edges")

    t = net.total_weight
    profiles = net.profiles().values()

    report = MetricsReport(
        N=n,
        L=l,
        T=t,
        L_over_N=l / n,
        delta=_connectivity(n, l - net.number_of_self_loops),
        F=t / n,
        K=2.0 * l / n,
        W=t / l,
        cv_flow=coefficient_of_variation(p.strength_in + p.strength_out for p in profiles),
        cv_degree=coefficient_of_variation(p.k_in + p.k_out for p in profiles),
        cv_weight=coefficient_of_variation(net.weights()),
    )
    logger.info(f"Metrics: N={report.N} L={report.L} T={report.T} delta={report.delta:.4g}")
    return report
