"""
Pipeline Module
Orchestrates convert -> assign -> build -> metrics -> dist -> fit with progress tracking.
"""

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Generator, Iterator, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src import config
from src.core import charts, formats
from src.errors import DegenerateX, InsufficientData, ParseError, StageError, ToolkitError
from src.geo import zoning
from src.network import distfit, metrics, odnet

logger = logging.getLogger(__name__)


_OPTIONAL_KEYS = ("utm_zone", "hemisphere", "mapping")
_VALUE_TYPES = {
    "trips": str, "zones": str, "output_dir": str, "mapping": str, "name": str,
    "coords": str, "utm_zone": int, "hemisphere": str, "datum": str,
    "include_self_loops": bool, "include_all_zones": bool, "index": str, "binning": str,
    "bins_per_decade": int, "min_decades": float, "min_r_squared": float, "threads": int,
}
_CHOICES = {
    "coords": formats.COORD_SYSTEMS,
    "hemisphere": ("north", "south"),
    "datum": tuple(sorted(config.DATUMS)),
    "index": config.INDEX_KINDS,
    "binning": config.BINNING_KINDS,
}
_RANGES = {
    "utm_zone": (1, 60),
    "bins_per_decade": (1, None),
    "threads": (1, None),
    "min_decades": (0.0, None),
    "min_r_squared": (0.0, 1.0),
}


def _checked_value(key: str, value: Any) -> Any:
    if value is None and key in _OPTIONAL_KEYS:
        return None
    expected = _VALUE_TYPES[key]
    # integers stand in for floats; booleans never count as numbers
    if expected is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        value = float(value)
    elif not isinstance(value, expected) or (expected is int and isinstance(value, bool)):
        raise ParseError(f"pipeline config '{key}' must be {expected.__name__}, got {value!r}")

    if key in _CHOICES and value not in _CHOICES[key]:
        raise ParseError(f"pipeline config '{key}' must be one of {', '.join(_CHOICES[key])}, got {value!r}")
    low, high = _RANGES.get(key, (None, None))
    if (low is not None and value < low) or (high is not None and value > high):
        raise ParseError(f"pipeline config '{key}' = {value!r} outside [{low}, {'inf' if high is None else high}]")
    return value


@dataclass
class PipelineConfig:
    """
    Pipeline inputs and options, loaded from a JSON file.
    """

    trips: Path
    zones: Path
    output_dir: Path
    name: str = "city"
    coords: str = "geo"
    utm_zone: Optional[int] = None
    hemisphere: Optional[str] = None
    datum: str = config.DEFAULT_DATUM
    mapping: Optional[Path] = None
    include_self_loops: bool = config.INCLUDE_SELF_LOOPS
    include_all_zones: bool = config.INCLUDE_ALL_ZONES
    index: str = config.DEFAULT_INDEX
    binning: str = config.DEFAULT_BINNING
    bins_per_decade: int = config.DEFAULT_BINS_PER_DECADE
    min_decades: float = config.DEFAULT_MIN_DECADES
    min_r_squared: float = config.DEFAULT_MIN_R_SQUARED
    threads: int = 1

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base_dir: Union[str, Path] = ".") -> "PipelineConfig":
        """
        Args:
            data: Parsed JSON object
            base_dir: Directory that relative paths are resolved against

        Raises:
            ParseError: Unknown keys, missing required keys, or values of the wrong type or range
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ParseError(f"unknown pipeline config key(s): {', '.join(unknown)}")
        missing = [key for key in ("trips", "zones", "output_dir") if not data.get(key)]
        if missing:
            raise ParseError(f"pipeline config lacks: {', '.join(missing)}")

        values = {key: _checked_value(key, value) for key, value in data.items()}
        base = Path(base_dir)
        for key in ("trips", "zones", "output_dir", "mapping"):
            if values.get(key):
                values[key] = base / Path(values[key])
        return cls(**values)

    def options(self) -> Dict[str, Any]:
        """Options that determine the results (thread count excluded)."""
        return {
            "coords": self.coords,
            "utm_zone": self.utm_zone,
            "hemisphere": self.hemisphere,
            "datum": self.datum,
            "mapping": None if self.mapping is None else str(self.mapping),
            "zones": str(self.zones),
            "include_self_loops": self.include_self_loops,
            "include_all_zones": self.include_all_zones,
            "index": self.index,
            "binning": self.binning,
            "bins_per_decade": self.bins_per_decade,
            "min_decades": self.min_decades,
            "min_r_squared": self.min_r_squared,
        }


def load_pipeline_config(path: Union[str, Path]) -> PipelineConfig:
    data = formats.read_json(path)
    if not isinstance(data, Mapping):
        raise ParseError(f"pipeline config {path} must be a JSON object")
    return PipelineConfig.from_dict(data, base_dir=Path(path).parent)


@dataclass
class ArtifactBundle:
    """Everything a pipeline run produced."""

    output_dir: Path
    files: Dict[str, Path]
    summary: Dict[str, Any]
    network: odnet.OdNetwork
    report: metrics.MetricsReport
    fit: Optional[distfit.PowerLawFit] = None
    verdict: Optional[distfit.Verdict] = None
    counts: Dict[str, int] = field(default_factory=dict)


def assign_trip_table(
    table: pd.DataFrame,
    index: zoning.ZoneIndex,
    threads: int = 1,
) -> Tuple[pd.DataFrame, int, int]:
    """
    Resolve both endpoints of every trip to zones.

    Records with an unassigned endpoint are dropped whole.

    Returns:
        Tuple of (zoned trips with origin_id, dest_id, count; dropped records; dropped trips)
    """
    longitudes = np.concatenate([table["ox"].to_numpy(), table["dx"].to_numpy()])
    latitudes = np.concatenate([table["oy"].to_numpy(), table["dy"].to_numpy()])
    assigned = zoning.assign_batched(index, longitudes, latitudes, threads=threads)

    origins = assigned[:len(table)]
    destinations = assigned[len(table):]
    keep = np.array([o is not None and d is not None for o, d in zip(origins, destinations)], dtype=bool)

    counts = table["count"].to_numpy()
    dropped_records = int(np.count_nonzero(~keep))
    dropped_trips = int(counts[~keep].sum())
    if dropped_records:
        logger.warning(f"Dropped {dropped_records} record(s) ({dropped_trips} trips) with an unassigned endpoint")

    zoned = pd.DataFrame({
        "origin_id": origins[keep],
        "dest_id": destinations[keep],
        "count": counts[keep],
    })
    return zoned, dropped_records, dropped_trips


class ProcessingPipeline:
    """
    Runs the full analysis for one city and writes every intermediate artifact.
    """

    def __init__(self, pipeline_config: PipelineConfig):
        """
        Initialize processing pipeline.

        Args:
            pipeline_config: Inputs, outputs and options
        """
        self.config = pipeline_config
        self.output_dir = Path(pipeline_config.output_dir)
        self.files: Dict[str, Path] = {}
        self.counts: Dict[str, int] = {}

    def _path(self, name: str) -> Path:
        path = self.output_dir / name
        self.files[name] = path
        return path

    @contextmanager
    def _stage(self, name: str) -> Iterator[None]:
        try:
            yield
        except StageError:
            raise
        except Exception as e:
            raise StageError(name, e) from e

    def process(self) -> Generator[Dict, None, None]:
        """
        Run all stages, yielding progress updates as dictionaries:
        - stage: Current stage
        - progress: Percentage (0-100)
        - message: Status message
        - bundle: ArtifactBundle (last update only)
        - error: StageError (only on failure, then the generator stops)
        """
        cfg = self.config
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)

            # Stage 1: coordinates to geographic degrees
            yield {"stage": "convert", "progress": 0, "message": f"Reading trips from {cfg.trips}..."}
            with self._stage("convert"):
                raw = formats.read_trip_table(cfg.trips)
                table = formats.trips_to_geographic(raw, cfg.coords, cfg.utm_zone, cfg.hemisphere, cfg.datum)
                formats.write_trip_table(table, self._path(config.ARTIFACT_TRIPS_GEO))
            self.counts["records_read"] = len(table)
            self.counts["trips_read"] = int(table["count"].sum())
            yield {"stage": "convert", "progress": 15,
                   "message": f"Converted {len(table)} records ({cfg.coords} input)"}

            # Stage 2: endpoints to zones
            yield {"stage": "assign", "progress": 20, "message": f"Assigning endpoints to zones from {cfg.zones}..."}
            with self._stage("assign"):
                zones = zoning.load_zones(cfg.zones)
                if cfg.mapping is not None:
                    zones = zoning.aggregate_zones(zones, zoning.load_zone_mapping(cfg.mapping))
                index = zoning.build_index(zones, cfg.index)
                zoned, dropped_records, dropped_trips = assign_trip_table(table, index, cfg.threads)
                formats.write_zoned_trips(zoned, self._path(config.ARTIFACT_ZONED_TRIPS))
            self.counts["zones"] = len(zones)
            self.counts["dropped"] = dropped_records
            self.counts["dropped_trips"] = dropped_trips
            yield {"stage": "assign", "progress": 50,
                   "message": f"Assigned {len(zoned)} records, dropped {dropped_records}"}

            # Stage 3: network
            yield {"stage": "build", "progress": 55, "message": "Building OD network..."}
            with self._stage("build"):
                network = odnet.build_network(
                    formats.zoned_trips(zoned),
                    include_self_loops=cfg.include_self_loops,
                    extra_nodes=zones.ids if cfg.include_all_zones else (),
                    workers=cfg.threads,
                )
                formats.write_edge_list(network, self._path(config.ARTIFACT_NETWORK))
            self.counts["self_loops_discarded"] = network.discarded_self_loops
            yield {"stage": "build", "progress": 65, "message": f"Network built: {network!r}"}

            # Stage 4: structural metrics
            with self._stage("metrics"):
                report = metrics.compute_metrics(network)
                formats.write_report(
                    report, self._path(config.ARTIFACT_METRICS), cfg.name,
                    formats.provenance(cfg.trips, cfg.options()),
                )
            yield {"stage": "metrics", "progress": 75,
                   "message": f"Metrics: N={report.N}, L={report.L}, T={report.T}"}

            # Stage 5: edge-weight distribution
            with self._stage("dist"):
                histogram = distfit.weight_histogram(network)
                binned = distfit.bin_distribution(histogram, cfg.binning, cfg.bins_per_decade)
                formats.write_histogram(histogram, self._path(config.ARTIFACT_HISTOGRAM))
                formats.write_binned(binned, self._path(config.ARTIFACT_BINNED))
            yield {"stage": "dist", "progress": 85,
                   "message": f"{len(histogram)} distinct weights in {len(binned)} bins"}

            # Stage 6: power-law regression
            fit = None
            verdict = None
            fit_error = None
            with self._stage("fit"):
                try:
                    fit = distfit.fit_power_law(binned)
                    verdict = distfit.scale_free_verdict(fit, cfg.min_decades, cfg.min_r_squared)
                    fit_data = formats.fit_document(fit, verdict, cfg.min_decades, cfg.min_r_squared)
                except (InsufficientData, DegenerateX) as e:
                    logger.warning(f"Power-law fit skipped: {e}")
                    fit_error = {"error": type(e).__name__, "message": str(e)}
                    fit_data = dict(fit_error)
                formats.write_json(fit_data, self._path(config.ARTIFACT_FIT))
                charts.render_distribution_svg(
                    binned, fit, self._path(config.ARTIFACT_DISTRIBUTION_SVG), title=cfg.name
                )
            yield {"stage": "fit", "progress": 95,
                   "message": "Fit skipped" if fit is None else
                   f"alpha={fit.alpha:.4f}, r2={fit.r_squared:.3f}, verdict={verdict.value}"}

            summary = {
                "name": cfg.name,
                "counts": dict(self.counts),
                "metrics": report.to_dict(),
                "fit": None if fit is None else fit.to_dict(),
                "verdict": None if verdict is None else verdict.value,
                "fit_error": fit_error,
                "artifacts": sorted(self.files) + [config.ARTIFACT_SUMMARY],
                "provenance": formats.provenance(cfg.trips, cfg.options()),
            }
            formats.write_json(summary, self._path(config.ARTIFACT_SUMMARY))

            bundle = ArtifactBundle(
                output_dir=self.output_dir,
                files=dict(self.files),
                summary=summary,
                network=network,
                report=report,
                fit=fit,
                verdict=verdict,
                counts=dict(self.counts),
            )
            yield {"stage": "complete", "progress": 100, "message": "Analysis complete!", "bundle": bundle}

        except StageError as e:
            yield {"stage": "error", "progress": 0, "message": f"Error: {e}", "error": e}
        except OSError as e:
            yield {"stage": "error", "progress": 0, "message": f"Error: {e}", "error": StageError("output", e)}


def run_pipeline(pipeline_config: PipelineConfig) -> ArtifactBundle:
    """
    Run the pipeline, logging each progress update.

    Returns:
        ArtifactBundle of the finished run

    Raises:
        StageError: Naming the stage that failed
    """
    pipeline = ProcessingPipeline(pipeline_config)
    for update in pipeline.process():
        if update["stage"] == "error":
            raise update["error"]
        logger.info(f"[{update['progress']:3d}%] {update['message']}")
        if "bundle" in update:
            return update["bundle"]
    raise StageError("complete", RuntimeError("pipeline ended without a result"))
