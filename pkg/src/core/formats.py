"""
File Formats Module
Readers and writers for every artifact the toolkit consumes or produces.

- Trip CSV:        ox,oy,dx,dy[,count]   (geographic: x = longitude, y = latitude)
- Zoned trips CSV: origin_id,dest_id,count
- Edge list TSV:   origin_id<TAB>dest_id<TAB>weight, no header, lexicographic rows
- Histogram TSV:   weight<TAB>count<TAB>pdf
- Binned TSV:      x_center<TAB>density
- Reports:         JSON, two-space indent, no timestamps
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterator, Mapping, Optional, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd

from src import __version__, config
from src.errors import DomainError, ParseError
from src.geo import geodesy
from src.geo.zoning import ZoneSet, zones_to_geojson
from src.network.distfit import BinnedDistribution, PowerLawFit, Verdict, WeightDistribution
from src.network.metrics import MetricsReport
from src.network.odnet import OdNetwork, ZonedTrip, network_from_edges

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TRIP_COLUMNS = ["ox", "oy", "dx", "dy"]
ZONED_COLUMNS = ["origin_id", "dest_id", "count"]
COORD_SYSTEMS = ("geo", "utm")


# ============================================================================
# JSON
# ============================================================================

def write_json(data: Any, path: PathLike):
    """Deterministic JSON: key order as given, two-space indent, trailing newline."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(json.dumps(data, indent=2, ensure_ascii=False, allow_nan=False))
        handle.write("\n")


def read_json(path: PathLike) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError as e:
        raise ParseError(f"file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"{path} is not valid JSON: {e}") from e


def provenance(input_path: Optional[PathLike], options: Mapping[str, Any]) -> Dict[str, Any]:
    return {
        "tool": "odnet-toolkit",
        "version": __version__,
        "input": None if input_path is None else str(input_path),
        "options": dict(options),
    }


# ============================================================================
# TRIPS
# ============================================================================

def read_trip_table(path: PathLike) -> pd.DataFrame:
    """
    Read a trip CSV.

    Returns:
        DataFrame with float columns ox, oy, dx, dy and an int64 count column
        (1 when the file has none)

    Raises:
        ParseError: Missing file, wrong header, non-numeric values or counts < 1
    """
    try:
        table = pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError as e:
        raise ParseError(f"trip file not found: {path}") from e
    except pd.errors.EmptyDataError as e:
        raise ParseError(f"trip file {path} is empty") from e
    except pd.errors.ParserError as e:
        raise ParseError(f"trip file {path} is malformed: {e}") from e

    columns = list(table.columns)
    if columns not in (TRIP_COLUMNS, TRIP_COLUMNS + ["count"]):
        raise ParseError(f"trip file header must be 'ox,oy,dx,dy[,count]', got '{','.join(columns)}'")

    try:
        coordinates = table[TRIP_COLUMNS].astype(float)
    except ValueError as e:
        raise ParseError(f"trip file {path} has non-numeric coordinates: {e}") from e
    if not np.all(np.isfinite(coordinates.to_numpy())):
        raise ParseError(f"trip file {path} has missing or non-finite coordinates")

    if "count" in table:
        counts = pd.to_numeric(table["count"], errors="coerce")
        valid = counts.notna() & (counts >= 1) & (counts == np.floor(counts))
        if not valid.all():
            first_bad = int(np.flatnonzero(~valid.to_numpy())[0])
            raise ParseError(f"trip file {path} row {first_bad + 2}: count must be a positive integer")
        coordinates["count"] = counts.astype(np.int64)
    else:
        coordinates["count"] = np.ones(len(table), dtype=np.int64)

    logger.debug(f"Read {len(coordinates)} trip rows from {path}")
    return coordinates


def write_trip_table(table: pd.DataFrame, path: PathLike):
    table[TRIP_COLUMNS + ["count"]].to_csv(path, index=False, lineterminator="\n")


def trips_to_geographic(
    table: pd.DataFrame,
    coords: str,
    zone: Optional[int] = None,
    hemisphere: Optional[str] = None,
    datum: str = config.DEFAULT_DATUM,
) -> pd.DataFrame:
    """
    Express a trip table in geographic degrees.

    Args:
        table: Trip table as read by read_trip_table
        coords: 'geo' (returned unchanged) or 'utm'
        zone: File-wide UTM zone, required for 'utm'
        hemisphere: File-wide hemisphere, required for 'utm'
    """
    if coords not in COORD_SYSTEMS:
        raise DomainError(f"coords must be one of {COORD_SYSTEMS}, got {coords!r}")
    if coords == "geo":
        return table.copy()
    if zone is None or hemisphere is None:
        raise DomainError("UTM trip files need a file-wide zone and hemisphere")

    result = table.copy()
    for x, y in (("ox", "oy"), ("dx", "dy")):
        latitudes, longitudes = geodesy.utm_to_geographic_arrays(
            table[x].to_numpy(), table[y].to_numpy(), zone, hemisphere, datum
        )
        result[x] = longitudes
        result[y] = latitudes
    return result


def trips_to_utm(
    table: pd.DataFrame,
    zone: Optional[int] = None,
    hemisphere: Optional[str] = None,
    datum: str = config.DEFAULT_DATUM,
) -> Tuple[pd.DataFrame, int, str, int]:
    """
    Project a geographic trip table into one UTM zone.

    Zone and hemisphere default to those of the median endpoint.

    Returns:
        Tuple of (projected table, zone, hemisphere, points outside the zone width)
    """
    longitudes = np.concatenate([table["ox"].to_numpy(), table["dx"].to_numpy()])
    latitudes = np.concatenate([table["oy"].to_numpy(), table["dy"].to_numpy()])
    if zone is None:
        zone = geodesy.utm_zone_for(float(np.median(longitudes))) if len(longitudes) else 1
    if hemisphere is None:
        median_latitude = float(np.median(latitudes)) if len(latitudes) else 0.0
        hemisphere = geodesy.NORTH if median_latitude >= 0 else geodesy.SOUTH

    result = table.copy()
    out_of_zone = 0
    for x, y in (("ox", "oy"), ("dx", "dy")):
        projected = geodesy.geographic_to_utm_arrays(
            table[y].to_numpy(), table[x].to_numpy(), zone, hemisphere, datum
        )
        result[x] = projected.easting
        result[y] = projected.northing
        out_of_zone += projected.out_of_zone
    return result, zone, hemisphere, out_of_zone


# ============================================================================
# ZONED TRIPS
# ============================================================================

def write_zoned_trips(table: pd.DataFrame, path: PathLike):
    table[ZONED_COLUMNS].to_csv(path, index=False, lineterminator="\n")


def read_zoned_trips(path: PathLike) -> pd.DataFrame:
    """
    Raises:
        ParseError: Missing file, wrong header, empty ids or counts < 1
    """
    try:
        table = pd.read_csv(path, dtype={"origin_id": str, "dest_id": str}, keep_default_na=False)
    except FileNotFoundError as e:
        raise ParseError(f"zoned trip file not found: {path}") from e
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise ParseError(f"zoned trip file {path} is malformed: {e}") from e

    if list(table.columns) != ZONED_COLUMNS:
        raise ParseError(f"zoned trip header must be 'origin_id,dest_id,count', got '{','.join(table.columns)}'")
    if (table["origin_id"] == "").any() or (table["dest_id"] == "").any():
        raise ParseError(f"zoned trip file {path} has empty zone ids")
    counts = pd.to_numeric(table["count"], errors="coerce")
    if not (counts.notna() & (counts >= 1) & (counts == np.floor(counts))).all():
        raise ParseError(f"zoned trip file {path} has counts that are not positive integers")
    table["count"] = counts.astype(np.int64)
    return table


def zoned_trips(table: pd.DataFrame) -> Iterator[ZonedTrip]:
    for origin, destination, count in table[ZONED_COLUMNS].itertuples(index=False):
        yield ZonedTrip(origin, destination, int(count))


# ============================================================================
# NETWORK
# ============================================================================

def write_edge_list(net: OdNetwork, path: PathLike):
    nx.write_weighted_edgelist(net.graph, path, delimiter="\t", encoding="utf-8")


def read_edge_list(path: PathLike) -> OdNetwork:
    """
    Raises:
        ParseError: Missing file, wrong column count or bad weights
    """
    try:
        table = pd.read_csv(
            path, sep="\t", header=None, names=["origin_id", "dest_id", "weight"],
            dtype={"origin_id": str, "dest_id": str}, keep_default_na=False,
        )
    except FileNotFoundError as e:
        raise ParseError(f"edge list not found: {path}") from e
    except pd.errors.EmptyDataError:
        return network_from_edges([])
    except pd.errors.ParserError as e:
        raise ParseError(f"edge list {path} is malformed: {e}") from e

    weights = pd.to_numeric(table["weight"], errors="coerce")
    if not (weights.notna() & (weights >= 1) & (weights == np.floor(weights))).all():
        raise ParseError(f"edge list {path} has weights that are not positive integers")
    try:
        return network_from_edges(zip(table["origin_id"], table["dest_id"], weights.astype(np.int64).tolist()))
    except DomainError as e:
        raise ParseError(f"edge list {path}: {e}") from e


# ============================================================================
# METRICS
# ============================================================================

def write_report(report: MetricsReport, path: PathLike, name: str, source: Mapping[str, Any]):
    data = {"name": name}
    data.update(report.to_dict())
    data["provenance"] = dict(source)
    write_json(data, path)


def read_report(path: PathLike) -> Tuple[str, MetricsReport]:
    """
    Returns:
        Tuple of (city name, report); the name defaults to the file stem
    """
    data = read_json(path)
    if not isinstance(data, Mapping):
        raise ParseError(f"report {path} must be a JSON object")
    name = data.get("name") or Path(path).stem
    return str(name), MetricsReport.from_dict(data)


# ============================================================================
# DISTRIBUTIONS
# ============================================================================

def write_histogram(dist: WeightDistribution, path: PathLike):
    pd.DataFrame({"weight": dist.weights, "count": dist.counts, "pdf": dist.pdf}).to_csv(
        path, sep="\t", index=False, lineterminator="\n"
    )


def write_binned(binned: BinnedDistribution, path: PathLike):
    pd.DataFrame({"x_center": binned.centers, "density": binned.densities}).to_csv(
        path, sep="\t", index=False, lineterminator="\n"
    )


def fit_document(
    fit: PowerLawFit,
    verdict: Verdict,
    min_decades: float,
    min_r_squared: float,
) -> Dict[str, Any]:
    data = fit.to_dict()
    data["verdict"] = verdict.value
    data["thresholds"] = {"min_decades": min_decades, "min_r_squared": min_r_squared}
    return data


# ============================================================================
# ZONES
# ============================================================================

def write_zones_geojson(zones: ZoneSet, path: PathLike):
    write_json(zones_to_geojson(zones), path)
