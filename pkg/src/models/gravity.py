"""
Gravity Model Module
Generates synthetic monocentric/polycentric grid cities and their trips.

Zones are g x g unit squares with ids "r_c". Destinations follow
P(j | i) ~ a_j / (1 + d(i, j))^beta with attractiveness
a_j = epsilon + sum_p A_p * exp(-d(j, p) / lambda), where d is the Euclidean
distance between cell centers in cell units.
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from shapely.geometry import box

from src import config
from src.errors import DomainError, ParseError
from src.geo.geodesy import GeoCoordinate
from src.geo.zoning import Zone, ZoneSet
from src.network.odnet import TripRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Pole:
    zone_index: int
    amplitude: float


@dataclass(frozen=True)
class SynthConfig:
    """
    Synthetic city parameters.

    Attributes:
        grid_side: g, the city has g * g zones
        poles: Attraction poles (flat zone index r * g + c, amplitude)
        decay_length: lambda, pole influence length in cells
        beta: Gravity deceleration exponent
        epsilon: Base attractiveness of every zone
        trips: Number of trips to generate
        seed: PCG64 seed
    """

    grid_side: int = config.SYNTH_GRID_SIDE
    poles: Tuple[Pole, ...] = field(default_factory=tuple)
    decay_length: float = config.SYNTH_DECAY_LENGTH
    beta: float = config.SYNTH_BETA
    epsilon: float = config.SYNTH_EPSILON
    trips: int = config.SYNTH_TRIPS
    seed: int = config.SYNTH_SEED

    def __post_init__(self):
        object.__setattr__(self, "poles", tuple(self.poles))
        self.validate()

    def validate(self):
        """
        Raises:
            DomainError: If any parameter is out of range
        """
        if not isinstance(self.grid_side, int) or self.grid_side < 1:
            raise DomainError(f"grid_side must be an integer >= 1, got {self.grid_side!r}")
        if not isinstance(self.trips, int) or self.trips < 0:
            raise DomainError(f"trips must be an integer >= 0, got {self.trips!r}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.beta >= 0:
            raise DomainError(f"beta must be >= 0, got {self.beta}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.poles and not self.decay_length > 0:
            raise DomainError(f"decay_length must be > 0, got {self.decay_length}")
        zone_count = self.grid_side * self.grid_side
        for pole in self.poles:
            if not 0 <= pole.zone_index < zone_count:
                raise DomainError(f"pole zone index {pole.zone_index} outside [0, {zone_count})")
            if pole.amplitude < 0:
                raise DomainError(f"pole amplitude must be >= 0, got {pole.amplitude}")

    @property
    def zone_count(self) -> int:
        return self.grid_side * self.grid_side

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["poles"] = [asdict(pole) for pole in self.poles]
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ParseError(f"unknown synth config key(s): {', '.join(unknown)}")
        values = dict(data)
        poles = []
        for entry in values.get("poles", []):
            if isinstance(entry, Mapping):
                poles.append(Pole(int(entry["zone_index"]), float(entry["amplitude"])))
            else:
                zone_index, amplitude = entry
                poles.append(Pole(int(zone_index), float(amplitude)))
        values["poles"] = tuple(poles)
        return cls(**values)


def load_synth_config(source: Union[str, Path]) -> SynthConfig:
    try:
        with open(source, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except FileNotFoundError as e:
        raise ParseError(f"synth config not found: {source}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"synth config {source} is not valid JSON: {e}") from e
    if not isinstance(data, Mapping):
        raise ParseError("synth config must be a JSON object")
    try:
        return SynthConfig.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, DomainError):
            raise
        raise ParseError(f"synth config {source} is malformed: {e}") from e


@dataclass(frozen=True, eq=False)
class SynthOutput:
    """
    Generated city.

    Attributes:
        zones: Grid polygons
        trip_table: Columns ox, oy, dx, dy (x = longitude, y = latitude) and count
        origin_zones: Intended origin zone id of every trip
        destination_zones: Intended destination zone id of every trip
    """

    zones: ZoneSet
    trip_table: pd.DataFrame
    origin_zones: np.ndarray
    destination_zones: np.ndarray

    @property
    def trips(self) -> List[TripRecord]:
        rows = self.trip_table[["ox", "oy", "dx", "dy"]].itertuples(index=False)
        return [
            TripRecord(GeoCoordinate(oy, ox), GeoCoordinate(dy, dx))
            for ox, oy, dx, dy in rows
        ]


def zone_id(row: int, column: int) -> str:
    return f"{row}_{column}"


def grid_zones(grid_side: int) -> ZoneSet:
    """Unit-square zones; cell (r, c) spans x in [c, c+1], y in [r, r+1]."""
    return ZoneSet(
        Zone(id=zone_id(r, c), geometry=box(c, r, c + 1, r + 1))
        for r in range(grid_side)
        for c in range(grid_side)
    )


def _cell_centers(grid_side: int) -> np.ndarray:
    rows, columns = np.divmod(np.arange(grid_side * grid_side), grid_side)
    return np.column_stack([rows, columns]).astype(float)


def attractiveness(synth: SynthConfig) -> np.ndarray:
    """a_j for every zone, in flat index order."""
    centers = _cell_centers(synth.grid_side)
    values = np.full(synth.zone_count, float(synth.epsilon))
    for pole in synth.poles:
        distance = np.linalg.norm(centers - centers[pole.zone_index], axis=1)
        values += pole.amplitude * np.exp(-distance / synth.decay_length)
    return values


def _probability_matrix(synth: SynthConfig) -> np.ndarray:
    centers = _cell_centers(synth.grid_side)
    distance = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=2)
    weights = attractiveness(synth)[None, :] / (1.0 + distance) ** synth.beta
    return weights / weights.sum(axis=1, keepdims=True)


def destination_probabilities(synth: SynthConfig, origin: int) -> np.ndarray:
    """
    P(j | origin) over all zones.

    Args:
        synth: City parameters
        origin: Flat origin zone index r * g + c

    Raises:
        DomainError: If the origin is outside the grid
    """
    synth.validate()
    if not 0 <= origin < synth.zone_count:
        raise DomainError(f"origin zone index {origin} outside [0, {synth.zone_count})")
    centers = _cell_centers(synth.grid_side)
    distance = np.linalg.norm(centers - centers[origin], axis=1)
    weights = attractiveness(synth) / (1.0 + distance) ** synth.beta
    return weights / weights.sum()


def generate_city(synth: SynthConfig) -> SynthOutput:
    """
    Generate zones and trips, deterministically for a given seed.

    Origins are uniform over zones, destinations follow
    destination_probabilities, endpoints are uniform inside their cell
    (kept SYNTH_CELL_MARGIN away from the border).
    """
    synth.validate()
    g = synth.grid_side
    rng = np.random.Generator(np.random.PCG64(synth.seed))

    origins = rng.integers(0, synth.zone_count, size=synth.trips)
    draws = rng.random(synth.trips)
    destinations = np.empty(synth.trips, dtype=np.int64)

    if synth.trips:
        cdf = np.cumsum(_probability_matrix(synth), axis=1)
        for origin in np.unique(origins):
            rows = origins == origin
            picks = np.searchsorted(cdf[origin], draws[rows], side="right")
            destinations[rows] = np.minimum(picks, synth.zone_count - 1)

    margin = config.SYNTH_CELL_MARGIN
    span = 1.0 - 2.0 * margin
    jitter = margin + span * rng.random((synth.trips, 4))

    origin_rows, origin_columns = np.divmod(origins, g)
    destination_rows, destination_columns = np.divmod(destinations, g)
    trip_table = pd.DataFrame({
        "ox": origin_columns + jitter[:, 0],
        "oy": origin_rows + jitter[:, 1],
        "dx": destination_columns + jitter[:, 2],
        "dy": destination_rows + jitter[:, 3],
        "count": np.ones(synth.trips, dtype=np.int64),
    })

    ids = np.array([zone_id(r, c) for r in range(g) for c in range(g)], dtype=object)
    logger.info(f"Generated {synth.trips} trips over {synth.zone_count} zones (seed {synth.seed})")
    return SynthOutput(
        zones=grid_zones(g),
        trip_table=trip_table,
        origin_zones=ids[origins],
        destination_zones=ids[destinations],
    )


def centered_poles(grid_side: int, count: int, total_amplitude: float) -> Tuple[Pole, ...]:
    """
    Poles on a regular sub-lattice centred in the grid, splitting one total amplitude evenly.

    Args:
        grid_side: g
        count: 1 gives a monocentric city; a square number k^2 gives a k x k lattice
        total_amplitude: Sum of all pole amplitudes
    """
    side = int(round(count ** 0.5))
    if count < 1 or side * side != count:
        raise DomainError(f"pole count must be a positive square number, got {count}")
    if side > grid_side:
        raise DomainError(f"cannot place {count} poles on a {grid_side}x{grid_side} grid")

    # positions at the centres of `side` equal strips
    positions = [int((2 * k + 1) * grid_side // (2 * side)) for k in range(side)]
    amplitude = total_amplitude / count
    return tuple(Pole(r * grid_side + c, amplitude) for r in positions for c in positions)


def monocentric_config(**overrides) -> SynthConfig:
    g = overrides.pop("grid_side", config.SYNTH_GRID_SIDE)
    return SynthConfig(grid_side=g, poles=centered_poles(g, 1, config.SYNTH_POLE_AMPLITUDE), **overrides)


def polycentric_config(pole_count: int = 9, **overrides) -> SynthConfig:
    g = overrides.pop("grid_side", config.SYNTH_GRID_SIDE)
    return SynthConfig(grid_side=g, poles=centered_poles(g, pole_count, config.SYNTH_POLE_AMPLITUDE), **overrides)
