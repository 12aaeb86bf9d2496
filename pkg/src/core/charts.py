"""
Chart Module
Byte-stable SVG figures: the edge-weight distribution with its fitted power law.
"""

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional, Union

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from src import config
from src.errors import DomainError
from src.network.distfit import BinnedDistribution, PowerLawFit

logger = logging.getLogger(__name__)


@contextmanager
def stable_svg(hashsalt: str) -> Iterator[None]:
    """Fixed element-id salt and text drawn as paths, so equal figures give equal bytes."""
    with matplotlib.rc_context({"svg.hashsalt": hashsalt, "svg.fonttype": "path"}):
        yield


def save_svg(fig: Figure, path: Union[str, Path]):
    fig.savefig(path, format="svg", metadata={"Date": None})


def render_distribution_svg(
    binned: BinnedDistribution,
    fit: Optional[PowerLawFit],
    path: Union[str, Path],
    title: str = "",
):
    """
    Log-log plot of binned densities, with the fitted line when there is one.

    Args:
        binned: Binned weight distribution
        fit: Power-law fit of the same bins, or None to draw the points only
        path: Output SVG file
        title: Optional axes title

    Raises:
        DomainError: If no bin has a positive density
    """
    usable = binned.densities > 0
    if not np.any(usable):
        raise DomainError("nothing to plot: no bin has a positive density")
    x = binned.centers[usable]
    p = binned.densities[usable]

    with stable_svg(config.DISTRIBUTION_SVG_HASHSALT):
        fig = Figure(figsize=config.DISTRIBUTION_FIGURE_SIZE)
        ax = fig.add_subplot(111)
        ax.loglog(x, p, "o", label=f"{binned.scheme.kind} bins")
        if fit is not None:
            line_x = np.geomspace(x.min(), x.max(), 50) if x.max() > x.min() else x
            ax.loglog(line_x, fit.prefactor * line_x ** fit.alpha, "-",
                      label=f"α = {fit.alpha:.4f}, r² = {fit.r_squared:.3f}")
        ax.set_xlabel("edge weight w")
        ax.set_ylabel("p(w)")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right")
        save_svg(fig, path)

    logger.info(f"Distribution chart written to {path}")
