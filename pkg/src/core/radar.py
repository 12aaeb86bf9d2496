"""
Radar Comparison Module
Normalizes city reports onto shared log-scaled axes and draws radar charts.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from matplotlib.figure import Figure

from src import config
from src.core.charts import save_svg, stable_svg
from src.errors import DomainError
from src.network.metrics import MetricsReport

logger = logging.getLogger(__name__)

AXIS_LABELS = {
    "N": "N",
    "L": "L",
    "L_over_N": "L/N",
    "delta": "Δ",
    "T": "T",
    "F": "F",
    "K": "K",
    "W": "W",
}


@dataclass(frozen=True)
class RadarData:
    """
    Raw and normalized radar values.

    Normalized value on an axis = (log10 v - log10 min) / (log10 max - log10 min)
    over the compared cities; axes where all cities agree normalize to 0.5.
    """

    axes: Tuple[str, ...]
    cities: Tuple[str, ...]
    raw: Dict[str, List[float]]
    normalized: Dict[str, List[float]]

    def distances(self) -> Dict[str, Dict[str, float]]:
        """Root mean square difference of normalized values between every pair of cities."""
        result: Dict[str, Dict[str, float]] = {}
        for a in self.cities:
            row = {}
            for b in self.cities:
                diff = np.subtract(self.normalized[a], self.normalized[b])
                row[b] = float(math.sqrt(float(np.mean(diff * diff))))
            result[a] = row
        return result

    def to_dict(self) -> Dict:
        return {
            "axes": list(self.axes),
            "cities": list(self.cities),
            "raw": {city: list(values) for city, values in self.raw.items()},
            "normalized": {city: list(values) for city, values in self.normalized.items()},
            "distances": self.distances(),
        }


def radar_export(reports: Sequence[Tuple[str, MetricsReport]]) -> RadarData:
    """
    Build radar data for two or more named reports.

    Raises:
        DomainError: Fewer than two reports, repeated names, or a value <= 0
    """
    if len(reports) < 2:
        raise DomainError(f"radar comparison needs at least 2 reports, got {len(reports)}")
    names = [name for name, _ in reports]
    if len(set(names)) != len(names):
        raise DomainError(f"city names must be unique, got {names}")

    axes = config.RADAR_AXES
    raw = {name: [report.axis(axis) for axis in axes] for name, report in reports}
    for name, values in raw.items():
        for axis, value in zip(axes, values):
            if not value > 0:
                raise DomainError(f"{name}: {axis} = {value} is not positive (log scale undefined)")

    logs = np.log10(np.array([raw[name] for name in names]))
    low = logs.min(axis=0)
    high = logs.max(axis=0)
    span = high - low
    degenerate = span == 0
    scaled = np.where(degenerate, config.RADAR_DEGENERATE_VALUE, (logs - low) / np.where(degenerate, 1.0, span))

    normalized = {name: [float(v) for v in scaled[k]] for k, name in enumerate(names)}
    return RadarData(axes=tuple(axes), cities=tuple(names), raw=raw, normalized=normalized)


def render_radar_svg(radar: RadarData, path: Union[str, Path], title: str = ""):
    """
    Draw one closed polygon per city over the radar axes and save as SVG.

    Output is byte-stable: no date metadata, fixed element-id salt.
    """
    angles = np.linspace(0, 2 * np.pi, len(radar.axes), endpoint=False)
    closed_angles = np.concatenate([angles, angles[:1]])

    with stable_svg(config.RADAR_SVG_HASHSALT):
        fig = Figure(figsize=config.RADAR_FIGURE_SIZE)
        ax = fig.add_subplot(111, polar=True)
        for city in radar.cities:
            values = radar.normalized[city]
            closed = np.concatenate([values, values[:1]])
            ax.plot(closed_angles, closed, linewidth=2, label=city)
            ax.fill(closed_angles, closed, alpha=config.RADAR_FILL_ALPHA)

        ax.set_thetagrids(np.degrees(angles), [AXIS_LABELS.get(axis, axis) for axis in radar.axes])
        ax.set_ylim(0, 1)
        ax.set_yticks([0.25, 0.5, 0.75, 1.0])
        if title:
            ax.set_title(title)
        ax.legend(loc="lower right", bbox_to_anchor=(1.15, -0.1))
        save_svg(fig, path)

    logger.info(f"Radar chart written to {path}")
