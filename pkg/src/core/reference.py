"""
Reference Cities
Published network properties of five surveyed cities, usable as radar baselines.

Values are reproduced as published, including their internal inconsistencies:
the Brazilian F values equal 4T/N rather than T/N, Sao Paulo's L/N (3.318)
differs from L/N computed from its own N and L (3.371), and the Chicago and
Melbourne delta values differ from 2L/(N(N-1)).
"""

from typing import Dict, List

from src.errors import DomainError
from src.network.metrics import MetricsReport

REFERENCE_CITIES: Dict[str, MetricsReport] = {
    "belo_horizonte": MetricsReport(
        N=1255, L=53843, T=108093, L_over_N=42.902, delta=68.3e-3, F=344.5, K=85.8, W=2.0,
        cv_flow=0.96, cv_degree=1.04, cv_weight=1.38,
    ),
    "fortaleza": MetricsReport(
        N=2002, L=147517, T=270959, L_over_N=73.684, delta=73.6e-3, F=541.4, K=147.37, W=1.84,
        cv_flow=2.38, cv_degree=1.28, cv_weight=1.78,
    ),
    "chicago": MetricsReport(
        N=1867, L=37527, T=78680, L_over_N=20.1, delta=21.0e-3, F=42.1, K=20.1, W=2.1,
        cv_flow=1.15, cv_degree=0.93, cv_weight=1.73,
    ),
    "sao_paulo": MetricsReport(
        N=7532, L=25387, T=31854, L_over_N=3.318, delta=0.9e-3, F=16.9, K=6.63, W=1.27,
        cv_flow=1.14, cv_degree=1.17, cv_weight=0.53,
    ),
    "melbourne": MetricsReport(
        N=5998, L=63788, T=133754, L_over_N=10.63, delta=3.0e-3, F=22.3, K=10.63, W=2.1,
        cv_flow=2.01, cv_degree=1.4, cv_weight=1.56,
    ),
}


def reference_names() -> List[str]:
    return sorted(REFERENCE_CITIES)


def reference_report(name: str) -> MetricsReport:
    key = name.strip().lower().replace(" ", "_").replace("-", "_")
    try:
        return REFERENCE_CITIES[key]
    except KeyError:
        raise DomainError(
            f"unknown reference city '{name}' (known: {', '.join(reference_names())})"
        ) from None
