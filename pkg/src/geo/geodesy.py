"""
Geodesy Module
Converts trip coordinates between UTM and geographic latitude/longitude.

The projection is the Krueger series of the transverse Mercator to sixth order in
the third flattening, which keeps the error far below a millimetre inside a zone.
All heavy lifting works on numpy arrays; the scalar API wraps the array kernels.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional, Tuple

import numpy as np

from src import config
from src.errors import BadZoneOverride, DomainError, NumericalDivergence, OutOfBand

logger = logging.getLogger(__name__)

NORTH = "north"
SOUTH = "south"
HEMISPHERES = (NORTH, SOUTH)


def normalize_longitude(longitude: float) -> float:
    """Wrap a longitude into [-180, 180)."""
    return ((longitude + 180.0) % 360.0) - 180.0


@dataclass(frozen=True)
class GeoCoordinate:
    """
    Point in geographic decimal degrees.

    Longitude is normalized to [-180, 180) on construction.
    """

    latitude: float
    longitude: float

    def __post_init__(self):
        latitude = float(self.latitude)
        longitude = float(self.longitude)
        if not (math.isfinite(latitude) and math.isfinite(longitude)):
            raise DomainError(f"non-finite coordinate ({self.latitude}, {self.longitude})")
        if not -90.0 <= latitude <= 90.0:
            raise DomainError(f"latitude {latitude} outside [-90, 90]")
        object.__setattr__(self, "latitude", latitude)
        object.__setattr__(self, "longitude", normalize_longitude(longitude))


@dataclass(frozen=True)
class UtmCoordinate:
    """Point in a UTM zone, in meters."""

    zone: int
    hemisphere: str
    easting: float
    northing: float

    def __post_init__(self):
        _check_zone(self.zone)
        _check_hemisphere(self.hemisphere)
        if not 0.0 < self.easting < 1000000.0:
            raise DomainError(f"easting {self.easting} outside (0, 1000000)")
        if not 0.0 <= self.northing <= config.UTM_FALSE_NORTHING_SOUTH:
            raise DomainError(f"northing {self.northing} outside [0, 10000000]")


class _KruegerSeries(NamedTuple):
    e: float
    rectifying_radius: float
    alpha: Tuple[float, ...]
    beta: Tuple[float, ...]


@lru_cache(maxsize=None)
def _series(datum: str) -> _KruegerSeries:
    """Series coefficients for a named datum."""
    if datum not in config.DATUMS:
        raise DomainError(f"unknown datum '{datum}' (known: {', '.join(sorted(config.DATUMS))})")

    a, inverse_flattening = config.DATUMS[datum]
    f = 1.0 / inverse_flattening
    n = f / (2.0 - f)
    n2, n3, n4, n5, n6 = n ** 2, n ** 3, n ** 4, n ** 5, n ** 6

    rectifying_radius = a / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0)

    alpha = (
        n / 2 - 2 * n2 / 3 + 5 * n3 / 16 + 41 * n4 / 180 - 127 * n5 / 288 + 7891 * n6 / 37800,
        13 * n2 / 48 - 3 * n3 / 5 + 557 * n4 / 1440 + 281 * n5 / 630 - 1983433 * n6 / 1935360,
        61 * n3 / 240 - 103 * n4 / 140 + 15061 * n5 / 26880 + 167603 * n6 / 181440,
        49561 * n4 / 161280 - 179 * n5 / 168 + 6601661 * n6 / 7257600,
        34729 * n5 / 80640 - 3418889 * n6 / 1995840,
        212378941 * n6 / 319334400,
    )
    beta = (
        n / 2 - 2 * n2 / 3 + 37 * n3 / 96 - n4 / 360 - 81 * n5 / 512 + 96199 * n6 / 604800,
        n2 / 48 + n3 / 15 - 437 * n4 / 1440 + 46 * n5 / 105 - 1118711 * n6 / 3870720,
        17 * n3 / 480 - 37 * n4 / 840 - 209 * n5 / 4480 + 5569 * n6 / 90720,
        4397 * n4 / 161280 - 11 * n5 / 504 - 830251 * n6 / 7257600,
        4583 * n5 / 161280 - 108847 * n6 / 3991680,
        20648693 * n6 / 638668800,
    )

    return _KruegerSeries(
        e=math.sqrt(f * (2.0 - f)),
        rectifying_radius=rectifying_radius,
        alpha=alpha,
        beta=beta,
    )


def _check_zone(zone: int):
    if isinstance(zone, bool) or not isinstance(zone, (int, np.integer)) or not 1 <= zone <= 60:
        raise DomainError(f"UTM zone {zone!r} outside [1, 60]")


def _check_hemisphere(hemisphere: str):
    if hemisphere not in HEMISPHERES:
        raise DomainError(f"hemisphere must be one of {HEMISPHERES}, got {hemisphere!r}")


def utm_zone_for(longitude: float) -> int:
    """
    Natural UTM zone of a longitude.

    Args:
        longitude: Decimal degrees in [-180, 180)

    Returns:
        Zone number in [1, 60]
    """
    zone = math.floor((longitude + 180.0) / 6.0) + 1
    return min(max(zone, 1), 60)


def central_meridian(zone: int) -> float:
    """Central meridian of a UTM zone in degrees."""
    _check_zone(zone)
    return zone * 6.0 - 183.0


def _offsets_from_meridian(longitudes: np.ndarray, zone: int) -> np.ndarray:
    # wrapped so zones 1 and 60 see their neighbours across the antimeridian
    return ((longitudes - central_meridian(zone) + 180.0) % 360.0) - 180.0


def _forward(latitudes: np.ndarray, offsets: np.ndarray, datum: str) -> Tuple[np.ndarray, np.ndarray]:
    """Transverse Mercator kernel. Returns easting and northing from the equator."""
    s = _series(datum)
    phi = np.radians(latitudes)
    lam = np.radians(offsets)

    sin_phi = np.sin(phi)
    tau_prime = np.sinh(np.arctanh(sin_phi) - s.e * np.arctanh(s.e * sin_phi))
    xi_prime = np.arctan2(tau_prime, np.cos(lam))
    eta_prime = np.arctanh(np.sin(lam) / np.sqrt(1.0 + tau_prime * tau_prime))

    xi = xi_prime.copy()
    eta = eta_prime.copy()
    for j, coefficient in enumerate(s.alpha, start=1):
        xi += coefficient * np.sin(2 * j * xi_prime) * np.cosh(2 * j * eta_prime)
        eta += coefficient * np.cos(2 * j * xi_prime) * np.sinh(2 * j * eta_prime)

    scale = config.UTM_SCALE_FACTOR * s.rectifying_radius
    return config.UTM_FALSE_EASTING + scale * eta, scale * xi


def _inverse(eastings: np.ndarray, northings: np.ndarray, datum: str) -> Tuple[np.ndarray, np.ndarray]:
    """
    Inverse kernel. Northings are measured from the equator.

    Returns latitude and longitude offset from the central meridian, in degrees.

    Raises:
        NumericalDivergence: If the conformal latitude iteration does not settle
    """
    s = _series(datum)
    scale = config.UTM_SCALE_FACTOR * s.rectifying_radius
    xi = northings / scale
    eta = (eastings - config.UTM_FALSE_EASTING) / scale

    xi_prime = xi.copy()
    eta_prime = eta.copy()
    for j, coefficient in enumerate(s.beta, start=1):
        xi_prime -= coefficient * np.sin(2 * j * xi) * np.cosh(2 * j * eta)
        eta_prime -= coefficient * np.cos(2 * j * xi) * np.sinh(2 * j * eta)

    sinh_eta = np.sinh(eta_prime)
    cos_xi = np.cos(xi_prime)
    tau_prime = np.sin(xi_prime) / np.sqrt(sinh_eta * sinh_eta + cos_xi * cos_xi)
    lam = np.arctan2(sinh_eta, cos_xi)

    if not np.all(np.isfinite(tau_prime)):
        raise NumericalDivergence("inverse projection received non-finite coordinates")

    # Newton iteration for tau = tan(latitude) given the conformal tau'
    e = s.e
    e2 = e * e
    tau = tau_prime.copy()
    for _ in range(config.INVERSE_MAX_ITERATIONS):
        root = np.sqrt(1.0 + tau * tau)
        sigma = np.sinh(e * np.arctanh(e * tau / root))
        tau_i = tau * np.sqrt(1.0 + sigma * sigma) - sigma * root
        delta = (
            (tau_prime - tau_i) / np.sqrt(1.0 + tau_i * tau_i)
            * (1.0 + (1.0 - e2) * tau * tau) / ((1.0 - e2) * root)
        )
        tau = tau + delta
        if np.all(np.abs(delta) <= config.INVERSE_TOLERANCE * np.maximum(1.0, np.abs(tau))):
            break
    else:
        raise NumericalDivergence(
            f"latitude iteration did not converge in {config.INVERSE_MAX_ITERATIONS} steps"
        )

    return np.degrees(np.arctan(tau)), np.degrees(lam)


def _resolve_zone(longitude: float, zone_override: Optional[int]) -> int:
    natural = utm_zone_for(longitude)
    if zone_override is None:
        return natural
    _check_zone(zone_override)
    if (zone_override - natural) % 60 not in (0, 1, 59):
        raise BadZoneOverride(
            f"zone override {zone_override} is not within one zone of natural zone {natural}"
        )
    return int(zone_override)


def geographic_to_utm(
    p: GeoCoordinate,
    zone_override: Optional[int] = None,
    datum: str = config.DEFAULT_DATUM,
) -> UtmCoordinate:
    """
    Project a geographic point to UTM.

    Args:
        p: Point in decimal degrees
        zone_override: Optional zone, at most one away from the natural zone
        datum: Datum name from config.DATUMS

    Returns:
        UTM coordinate; hemisphere is north for latitude >= 0

    Raises:
        OutOfBand: If |latitude| > 84
        BadZoneOverride: If the override is not adjacent to the natural zone, or
            places the point beyond the zone's easting range (0, 1000000)
    """
    if abs(p.latitude) > config.UTM_MAX_ABS_LATITUDE:
        raise OutOfBand(f"latitude {p.latitude} outside the UTM band of +/-{config.UTM_MAX_ABS_LATITUDE}")

    zone = _resolve_zone(p.longitude, zone_override)
    offset = _offsets_from_meridian(np.array([p.longitude]), zone)
    if abs(offset[0]) > config.UTM_ZONE_HALF_WIDTH:
        logger.warning(f"longitude {p.longitude} lies {offset[0]:.3f} deg from zone {zone} central meridian")

    easting, northing = _forward(np.array([p.latitude]), offset, datum)
    if not 0.0 < easting[0] < config.UTM_FALSE_EASTING * 2:
        raise BadZoneOverride(
            f"zone {zone} puts ({p.latitude}, {p.longitude}) at easting {easting[0]:.1f}, outside (0, 1000000)"
        )
    hemisphere = NORTH if p.latitude >= 0 else SOUTH
    northing_value = float(northing[0])
    if hemisphere == SOUTH:
        northing_value += config.UTM_FALSE_NORTHING_SOUTH

    return UtmCoordinate(zone=zone, hemisphere=hemisphere, easting=float(easting[0]), northing=northing_value)


def utm_to_geographic(p: UtmCoordinate, datum: str = config.DEFAULT_DATUM) -> GeoCoordinate:
    """
    Inverse of geographic_to_utm under the same datum.

    Raises:
        NumericalDivergence: If the latitude iteration fails to converge
    """
    northing = p.northing
    if p.hemisphere == SOUTH:
        northing -= config.UTM_FALSE_NORTHING_SOUTH

    latitude, offset = _inverse(np.array([p.easting]), np.array([northing]), datum)
    return GeoCoordinate(
        latitude=float(latitude[0]),
        longitude=central_meridian(p.zone) + float(offset[0]),
    )


# ============================================================================
# BULK CONVERSION
# ============================================================================

class UtmArrays(NamedTuple):
    """Bulk projection output."""

    easting: np.ndarray
    northing: np.ndarray
    out_of_zone: int


def geographic_to_utm_arrays(
    latitudes: np.ndarray,
    longitudes: np.ndarray,
    zone: int,
    hemisphere: str,
    datum: str = config.DEFAULT_DATUM,
) -> UtmArrays:
    """
    Project many points into one file-wide zone and hemisphere.

    Points further than the zone half-width from the central meridian are still
    converted and counted in ``out_of_zone``.

    Raises:
        OutOfBand: If any |latitude| > 84
    """
    _check_zone(zone)
    _check_hemisphere(hemisphere)
    latitudes = np.asarray(latitudes, dtype=float)
    longitudes = np.asarray(longitudes, dtype=float)

    out_of_band = np.count_nonzero(~(np.abs(latitudes) <= config.UTM_MAX_ABS_LATITUDE))
    if out_of_band:
        raise OutOfBand(f"{out_of_band} point(s) outside the UTM band of +/-{config.UTM_MAX_ABS_LATITUDE}")

    offsets = _offsets_from_meridian(longitudes, zone)
    out_of_zone = int(np.count_nonzero(np.abs(offsets) > config.UTM_ZONE_HALF_WIDTH))
    if out_of_zone:
        logger.warning(f"{out_of_zone} point(s) lie outside the +/-3 deg width of zone {zone}")

    easting, northing = _forward(latitudes, offsets, datum)
    if hemisphere == SOUTH:
        northing = northing + config.UTM_FALSE_NORTHING_SOUTH

    return UtmArrays(easting=easting, northing=northing, out_of_zone=out_of_zone)


def utm_to_geographic_arrays(
    eastings: np.ndarray,
    northings: np.ndarray,
    zone: int,
    hemisphere: str,
    datum: str = config.DEFAULT_DATUM,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Inverse-project many points sharing one zone and hemisphere.

    Returns:
        Tuple of (latitudes, longitudes) in degrees, longitudes in [-180, 180)

    Raises:
        DomainError: If any coordinate violates the UTM ranges
        NumericalDivergence: If the iteration fails to converge
    """
    _check_zone(zone)
    _check_hemisphere(hemisphere)
    eastings = np.asarray(eastings, dtype=float)
    northings = np.asarray(northings, dtype=float)

    bad = np.count_nonzero(
        ~((eastings > 0.0) & (eastings < 1000000.0)
          & (northings >= 0.0) & (northings <= config.UTM_FALSE_NORTHING_SOUTH))
    )
    if bad:
        raise DomainError(f"{bad} UTM coordinate(s) outside easting (0, 1e6) / northing [0, 1e7]")

    if hemisphere == SOUTH:
        northings = northings - config.UTM_FALSE_NORTHING_SOUTH

    latitudes, offsets = _inverse(eastings, northings, datum)
    longitudes = ((central_meridian(zone) + offsets + 180.0) % 360.0) - 180.0
    return latitudes, longitudes
