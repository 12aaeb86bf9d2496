"""
Zoning Module
Loads zone polygons, indexes them and assigns trip endpoints to zones.

Containment is planar. A point inside or on the border of several zones belongs
to the zone with the lexicographically smallest id.
"""

import json
import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import shapely
from shapely.geometry import MultiPolygon, Polygon, mapping as geometry_mapping, shape
from shapely.strtree import STRtree
from shapely.validation import explain_validity

from src import config
from src.errors import ConflictError, DomainError, GeometryError, ParseError
from src.geo.geodesy import GeoCoordinate

logger = logging.getLogger(__name__)

ZoneGeometry = Union[Polygon, MultiPolygon]


@dataclass(frozen=True)
class Zone:
    """
    A census sector or other areal unit.

    Zones produced by aggregate_zones keep the source zones they were merged
    from in `parts`; indexes resolve shared boundaries on those.
    """

    id: str
    geometry: ZoneGeometry
    parts: Tuple["Zone", ...] = ()

    @property
    def pieces(self) -> Tuple["Zone", ...]:
        return self.parts or (self,)


class ZoneSet:
    """
    Ordered collection of zones with unique ids.
    """

    def __init__(self, zones: Iterable[Zone]):
        self._zones: Tuple[Zone, ...] = tuple(zones)
        self._by_id: Dict[str, Zone] = {}
        duplicates = []
        for zone in self._zones:
            if zone.id in self._by_id:
                duplicates.append(f"duplicate zone id '{zone.id}'")
            self._by_id[zone.id] = zone
        if duplicates:
            raise GeometryError("zone ids must be unique", duplicates)

    def __len__(self) -> int:
        return len(self._zones)

    def __iter__(self) -> Iterator[Zone]:
        return iter(self._zones)

    def __getitem__(self, zone_id: str) -> Zone:
        return self._by_id[zone_id]

    def __contains__(self, zone_id: object) -> bool:
        return zone_id in self._by_id

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ZoneSet):
            return NotImplemented
        return self.ids == other.ids and all(
            a.geometry.equals(b.geometry) for a, b in zip(self._zones, other._zones)
        )

    def __repr__(self) -> str:
        return f"ZoneSet({len(self)} zones)"

    @property
    def ids(self) -> List[str]:
        return [zone.id for zone in self._zones]

    @property
    def geometries(self) -> List[ZoneGeometry]:
        return [zone.geometry for zone in self._zones]

    @property
    def bounds(self) -> Optional[Tuple[float, float, float, float]]:
        """(min lon, min lat, max lon, max lat), or None for an empty set."""
        if not self._zones:
            return None
        boxes = shapely.bounds(np.array(self.geometries, dtype=object))
        return (
            float(boxes[:, 0].min()),
            float(boxes[:, 1].min()),
            float(boxes[:, 2].max()),
            float(boxes[:, 3].max()),
        )


# ============================================================================
# LOADING AND VALIDATION
# ============================================================================

def _ring_problems(ring: Sequence, label: str) -> List[str]:
    problems = []
    if not isinstance(ring, (list, tuple)):
        return [f"{label} is not a coordinate list"]
    if len(ring) < 4:
        problems.append(f"{label} has {len(ring)} vertices (at least 4 required)")
    try:
        vertices = [(float(v[0]), float(v[1])) for v in ring]
    except (TypeError, ValueError, IndexError):
        return problems + [f"{label} has non-numeric vertices"]
    if vertices and vertices[0] != vertices[-1]:
        problems.append(f"{label} is not closed (first vertex != last vertex)")
    for lon, lat in vertices:
        if not (-180.0 <= lon <= 180.0 and -90.0 <= lat <= 90.0):
            problems.append(f"{label} has vertex ({lon}, {lat}) outside geographic degrees")
            break
    if not problems and not shapely.LinearRing(vertices).is_simple:
        problems.append(f"{label} self-intersects")
    return problems


def _polygon_problems(rings: Sequence, label: str) -> List[str]:
    if not isinstance(rings, (list, tuple)) or not rings:
        return [f"{label} has no rings"]
    problems = _ring_problems(rings[0], f"{label} exterior ring")
    for k, hole in enumerate(rings[1:], start=1):
        problems.extend(_ring_problems(hole, f"{label} interior ring {k}"))
    return problems


def _feature_to_zone(feature: Mapping, position: int) -> Tuple[Optional[Zone], List[str]]:
    """Validate one GeoJSON feature. Returns the zone or a list of diagnostics."""
    label = f"feature #{position}"
    if not isinstance(feature, Mapping) or feature.get("type") != "Feature":
        raise ParseError(f"{label} is not a GeoJSON Feature")

    properties = feature.get("properties") or {}
    zone_id = properties.get("id")
    if not isinstance(zone_id, str) or not zone_id:
        raise ParseError(f"{label} lacks a string 'id' property")
    label = f"feature '{zone_id}'"

    geometry = feature.get("geometry")
    if not isinstance(geometry, Mapping):
        raise ParseError(f"{label} has no geometry")

    kind = geometry.get("type")
    coordinates = geometry.get("coordinates")
    if kind == "Polygon":
        problems = _polygon_problems(coordinates, label)
    elif kind == "MultiPolygon":
        if not isinstance(coordinates, (list, tuple)) or not coordinates:
            problems = [f"{label} has no polygons"]
        else:
            problems = []
            for k, part in enumerate(coordinates):
                problems.extend(_polygon_problems(part, f"{label} part {k}"))
    else:
        raise ParseError(f"{label} has unsupported geometry type {kind!r}")

    if problems:
        return None, problems

    polygon = shape(geometry)
    if not polygon.is_valid:
        return None, [f"{label} is invalid: {explain_validity(polygon)}"]
    return Zone(id=zone_id, geometry=polygon), []


def parse_zones(document: Mapping) -> ZoneSet:
    """
    Build a validated ZoneSet from a parsed GeoJSON FeatureCollection.

    Raises:
        ParseError: If the document structure is wrong
        GeometryError: If any feature fails validation or ids repeat
    """
    if not isinstance(document, Mapping) or document.get("type") != "FeatureCollection":
        raise ParseError("zone file must be a GeoJSON FeatureCollection")
    features = document.get("features")
    if not isinstance(features, list):
        raise ParseError("FeatureCollection has no 'features' list")

    zones = []
    diagnostics = []
    seen = set()
    for position, feature in enumerate(features):
        zone, problems = _feature_to_zone(feature, position)
        diagnostics.extend(problems)
        if zone is None:
            continue
        if zone.id in seen:
            diagnostics.append(f"duplicate zone id '{zone.id}'")
            continue
        seen.add(zone.id)
        zones.append(zone)

    if diagnostics:
        raise GeometryError(f"{len(diagnostics)} invalid zone geometr{'y' if len(diagnostics) == 1 else 'ies'}",
                            diagnostics)

    logger.info(f"Loaded {len(zones)} zones")
    return ZoneSet(zones)


def load_zones(source: Union[str, Path]) -> ZoneSet:
    """
    Load zones from a GeoJSON file.

    Args:
        source: Path to a FeatureCollection with an 'id' property per feature

    Returns:
        Validated ZoneSet, ids preserved verbatim in file order
    """
    try:
        with open(source, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except FileNotFoundError as e:
        raise ParseError(f"zone file not found: {source}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"zone file {source} is not valid JSON: {e}") from e
    return parse_zones(document)


def zones_to_geojson(zones: ZoneSet) -> Dict:
    """Serialize a ZoneSet as a GeoJSON FeatureCollection."""
    return {
        "type": "FeatureCollection",
        "features": [
            {"type": "Feature", "properties": {"id": zone.id}, "geometry": geometry_mapping(zone.geometry)}
            for zone in zones
        ],
    }


# ============================================================================
# SPATIAL INDEXES
# ============================================================================

class ZoneIndex(ABC):
    """
    Spatial query structure over a ZoneSet. Immutable after construction.
    """

    kind = "abstract"

    def __init__(self, zones: ZoneSet):
        self.zones = zones
        entries = [(zone.id, piece) for zone in zones for piece in zone.pieces]
        self._ids = np.array([zone_id for zone_id, _ in entries], dtype=object)
        self._geometries = np.array([piece.geometry for _, piece in entries], dtype=object)
        shapely.prepare(self._geometries)

        # rank[k] = position of entry k's source zone id in lexicographic order
        source_ids = [piece.id for _, piece in entries]
        order = sorted(range(len(source_ids)), key=source_ids.__getitem__)
        self._rank = np.empty(len(order), dtype=np.int64)
        self._rank[order] = np.arange(len(order))

    @abstractmethod
    def _candidate_indices(self, point: shapely.Point) -> np.ndarray:
        """Zone positions whose bounding box may contain the point."""

    @abstractmethod
    def _covering_pairs(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(point positions, zone positions) of every zone covering a point."""

    def candidates(self, point: GeoCoordinate) -> List[str]:
        """Superset of the zones that can contain the point."""
        found = self._candidate_indices(shapely.Point(point.longitude, point.latitude))
        return sorted(set(self._ids[found].tolist()))

    def assign_many(self, longitudes: np.ndarray, latitudes: np.ndarray) -> np.ndarray:
        """
        Assign many points.

        Args:
            longitudes: Point x coordinates in degrees
            latitudes: Point y coordinates in degrees

        Returns:
            Object array of zone ids, None where no zone contains the point
        """
        points = shapely.points(np.asarray(longitudes, dtype=float), np.asarray(latitudes, dtype=float))
        result = np.full(len(points), None, dtype=object)
        if len(points) == 0 or len(self._ids) == 0:
            return result

        point_idx, zone_idx = self._covering_pairs(points)
        if len(point_idx) == 0:
            return result

        order = np.lexsort((self._rank[zone_idx], point_idx))
        point_idx = point_idx[order]
        zone_idx = zone_idx[order]
        winners, first = np.unique(point_idx, return_index=True)
        result[winners] = self._ids[zone_idx[first]]
        return result

    def assign_point(self, point: GeoCoordinate) -> Optional[str]:
        return self.assign_many(np.array([point.longitude]), np.array([point.latitude]))[0]


class StrTreeIndex(ZoneIndex):
    """Packed bounding-box tree (Sort-Tile-Recursive) over zone envelopes."""

    kind = "strtree"

    def __init__(self, zones: ZoneSet):
        super().__init__(zones)
        self._tree = STRtree(self._geometries)

    def _candidate_indices(self, point: shapely.Point) -> np.ndarray:
        return np.asarray(self._tree.query(point), dtype=np.int64)

    def _covering_pairs(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        pairs = self._tree.query(points, predicate="covered_by")
        return pairs[0].astype(np.int64), pairs[1].astype(np.int64)


class GridIndex(ZoneIndex):
    """Uniform grid; every cell lists the zones whose envelope touches it."""

    kind = "grid"

    def __init__(self, zones: ZoneSet, cells_per_axis: Optional[int] = config.GRID_CELLS_PER_AXIS):
        super().__init__(zones)
        if cells_per_axis is None:
            cells_per_axis = max(1, math.ceil(math.sqrt(len(zones))))
        if cells_per_axis < 1:
            raise DomainError(f"cells_per_axis must be >= 1, got {cells_per_axis}")
        self.cells_per_axis = cells_per_axis

        bounds = zones.bounds or (0.0, 0.0, 1.0, 1.0)
        self._origin = np.array(bounds[:2])
        extent = np.array([bounds[2] - bounds[0], bounds[3] - bounds[1]])
        self._cell_size = np.where(extent > 0, extent / cells_per_axis, 1.0)
        self._upper = np.array(bounds[2:])

        cells: List[List[int]] = [[] for _ in range(cells_per_axis * cells_per_axis)]
        if len(zones):
            boxes = shapely.bounds(self._geometries)
            low = self._cell_of(boxes[:, :2])
            high = self._cell_of(boxes[:, 2:])
            for k in range(len(boxes)):
                for iy in range(low[k, 1], high[k, 1] + 1):
                    for ix in range(low[k, 0], high[k, 0] + 1):
                        cells[iy * cells_per_axis + ix].append(k)
        self._cells = [np.array(members, dtype=np.int64) for members in cells]

    def _cell_of(self, xy: np.ndarray) -> np.ndarray:
        cell = np.floor((xy - self._origin) / self._cell_size).astype(np.int64)
        return np.clip(cell, 0, self.cells_per_axis - 1)

    def _inside_bounds(self, xy: np.ndarray) -> np.ndarray:
        return np.all((xy >= self._origin) & (xy <= self._upper), axis=1)

    def _candidate_indices(self, point: shapely.Point) -> np.ndarray:
        xy = np.array([[point.x, point.y]])
        if not self._inside_bounds(xy)[0]:
            return np.empty(0, dtype=np.int64)
        ix, iy = self._cell_of(xy)[0]
        return self._cells[iy * self.cells_per_axis + ix]

    def _covering_pairs(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        xy = shapely.get_coordinates(points)
        inside = np.flatnonzero(self._inside_bounds(xy))
        cells = self._cell_of(xy[inside])
        cell_ids = cells[:, 1] * self.cells_per_axis + cells[:, 0]

        point_parts = []
        zone_parts = []
        for cell_id in np.unique(cell_ids):
            members = self._cells[cell_id]
            if len(members) == 0:
                continue
            in_cell = inside[cell_ids == cell_id]
            point_parts.append(np.repeat(in_cell, len(members)))
            zone_parts.append(np.tile(members, len(in_cell)))

        if not point_parts:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        point_idx = np.concatenate(point_parts)
        zone_idx = np.concatenate(zone_parts)
        hit = shapely.covers(self._geometries[zone_idx], points[point_idx])
        return point_idx[hit], zone_idx[hit]


class LinearScanIndex(ZoneIndex):
    """Brute-force reference: tests every zone for every point."""

    kind = "linear"

    def _candidate_indices(self, point: shapely.Point) -> np.ndarray:
        return np.arange(len(self._ids), dtype=np.int64)

    def _covering_pairs(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        point_parts = []
        zone_parts = []
        for k, geometry in enumerate(self._geometries):
            hit = np.flatnonzero(shapely.covers(geometry, points))
            point_parts.append(hit)
            zone_parts.append(np.full(len(hit), k, dtype=np.int64))
        return np.concatenate(point_parts), np.concatenate(zone_parts)


_INDEX_TYPES = {cls.kind: cls for cls in (StrTreeIndex, GridIndex, LinearScanIndex)}


def build_index(zones: ZoneSet, kind: str = config.DEFAULT_INDEX) -> ZoneIndex:
    """
    Build a spatial index.

    Args:
        zones: Validated zones
        kind: 'strtree' (default), 'grid' or 'linear'
    """
    if kind not in _INDEX_TYPES:
        raise DomainError(f"unknown index kind '{kind}' (choose from {', '.join(config.INDEX_KINDS)})")
    index = _INDEX_TYPES[kind](zones)
    logger.debug(f"Built {kind} index over {len(zones)} zones")
    return index


def assign(point: GeoCoordinate, index: ZoneIndex) -> Optional[str]:
    """
    Zone containing a point.

    Returns:
        Zone id, or None (unassigned) if no zone contains the point
    """
    return index.assign_point(point)


def assign_batched(
    index: ZoneIndex,
    longitudes: np.ndarray,
    latitudes: np.ndarray,
    threads: int = 1,
    batch_size: int = config.ASSIGN_BATCH_SIZE,
) -> np.ndarray:
    """
    Assign many points, fanning batches out across worker threads.

    Batches are stitched back in input order, so the result does not depend
    on the thread count.
    """
    longitudes = np.asarray(longitudes, dtype=float)
    latitudes = np.asarray(latitudes, dtype=float)
    if threads < 1:
        raise DomainError(f"threads must be >= 1, got {threads}")
    if threads == 1 or len(longitudes) <= batch_size:
        return index.assign_many(longitudes, latitudes)

    starts = range(0, len(longitudes), batch_size)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(
            lambda start: index.assign_many(longitudes[start:start + batch_size],
                                            latitudes[start:start + batch_size]),
            starts,
        ))
    return np.concatenate(parts)


# ============================================================================
# AGGREGATION
# ============================================================================

def load_zone_mapping(source: Union[str, Path]) -> Dict[str, str]:
    """
    Read a `zone_id,group_id` CSV.

    Raises:
        ParseError: Missing file or columns
        ConflictError: If a zone is mapped to two different groups
    """
    try:
        table = pd.read_csv(source, dtype=str, keep_default_na=False)
    except FileNotFoundError as e:
        raise ParseError(f"mapping file not found: {source}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"mapping file {source} is malformed: {e}") from e

    if list(table.columns) != ["zone_id", "group_id"]:
        raise ParseError(f"mapping file header must be 'zone_id,group_id', got {','.join(table.columns)}")
    return _checked_mapping(zip(table["zone_id"], table["group_id"]))


def _checked_mapping(pairs: Iterable[Tuple[str, str]]) -> Dict[str, str]:
    result: Dict[str, str] = {}
    conflicts = []
    for zone_id, group_id in pairs:
        if zone_id in result and result[zone_id] != group_id:
            conflicts.append(f"zone '{zone_id}' claimed by '{result[zone_id]}' and '{group_id}'")
            continue
        result[zone_id] = group_id
    if conflicts:
        raise ConflictError("; ".join(conflicts))
    return result


def aggregate_zones(
    zones: ZoneSet,
    mapping: Union[Mapping[str, str], Iterable[Tuple[str, str]]],
) -> ZoneSet:
    """
    Merge zones into groups (e.g. census sectors into heterogeneous areas).

    Args:
        zones: Source zones
        mapping: zone id -> group id, as a dict or (zone, group) pairs; unmapped ids pass through

    Returns:
        ZoneSet of group polygons, ordered by first appearance of each group

    Raises:
        ConflictError: If two groups claim the same source zone
    """
    if isinstance(mapping, Mapping):
        lookup = dict(mapping)
    else:
        lookup = _checked_mapping(mapping)

    members: Dict[str, List[Zone]] = {}
    for zone in zones:
        members.setdefault(lookup.get(zone.id, zone.id), []).append(zone)

    grouped = []
    for group_id, parts in members.items():
        if len(parts) == 1 and parts[0].id == group_id:
            grouped.append(parts[0])
            continue
        geometry = parts[0].geometry if len(parts) == 1 else shapely.union_all([part.geometry for part in parts])
        pieces = tuple(piece for part in parts for piece in part.pieces)
        grouped.append(Zone(id=group_id, geometry=geometry, parts=pieces))

    logger.info(f"Aggregated {len(zones)} zones into {len(grouped)} groups")
    return ZoneSet(grouped)
