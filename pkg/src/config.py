"""
Configuration module for the OD Network Toolkit.
Contains all constants and default parameters used across the toolkit.
"""

# ============================================================================
# GEODESY
# ============================================================================

# Ellipsoids as (semi-major axis in meters, inverse flattening)
# SIRGAS2000 uses GRS80, which differs from WGS84 only in the ninth digit of 1/f
DATUMS = {
    "WGS84": (6378137.0, 298.257223563),
    "SIRGAS2000": (6378137.0, 298.257222101),
}
DEFAULT_DATUM = "WGS84"

UTM_SCALE_FACTOR = 0.9996
UTM_FALSE_EASTING = 500000.0
UTM_FALSE_NORTHING_SOUTH = 10000000.0
UTM_MAX_ABS_LATITUDE = 84.0
UTM_ZONE_HALF_WIDTH = 3.0  # degrees either side of the central meridian

# Inverse projection: Newton iteration on the conformal latitude
INVERSE_MAX_ITERATIONS = 10
INVERSE_TOLERANCE = 1e-14

# ============================================================================
# ZONING
# ============================================================================

INDEX_KINDS = ("strtree", "grid", "linear")
DEFAULT_INDEX = "strtree"

# Uniform grid: None picks ceil(sqrt(zone count)) cells per axis
GRID_CELLS_PER_AXIS = None

# Record batch size when the assign stage fans out across threads
ASSIGN_BATCH_SIZE = 50000

# ============================================================================
# NETWORK CONSTRUCTION
# ============================================================================

INCLUDE_SELF_LOOPS = True
INCLUDE_ALL_ZONES = False

# ============================================================================
# DISTRIBUTION FITTING
# ============================================================================

BINNING_KINDS = ("logarithmic", "linear")
DEFAULT_BINNING = "logarithmic"
DEFAULT_BINS_PER_DECADE = 5
MIN_FIT_POINTS = 3

# Scale-free verdict thresholds
DEFAULT_MIN_DECADES = 3.0
DEFAULT_MIN_R_SQUARED = 0.9

# Support size used when sampling discrete power laws
POWER_LAW_SUPPORT_MAX = 1000000

# ============================================================================
# SYNTHETIC CITIES
# ============================================================================

SYNTH_GRID_SIDE = 11
SYNTH_POLE_AMPLITUDE = 100.0
SYNTH_DECAY_LENGTH = 1.0
SYNTH_BETA = 2.0
SYNTH_EPSILON = 1.0
SYNTH_TRIPS = 100000
SYNTH_SEED = 20170101

# Endpoints are drawn this far (in cell units) from the cell border
SYNTH_CELL_MARGIN = 1e-3

# ============================================================================
# RADAR COMPARISON
# ============================================================================

RADAR_AXES = ("N", "L", "L_over_N", "delta", "T", "F", "K", "W")
RADAR_DEGENERATE_VALUE = 0.5

# Static figure settings (matplotlib, Agg backend)
RADAR_FIGURE_SIZE = (7, 7)
RADAR_FILL_ALPHA = 0.25
RADAR_SVG_HASHSALT = "odnet-radar"

DISTRIBUTION_FIGURE_SIZE = (7, 5)
DISTRIBUTION_SVG_HASHSALT = "odnet-distribution"

# ============================================================================
# ARTIFACT FILE NAMES
# ============================================================================

ARTIFACT_TRIPS_GEO = "trips_geo.csv"
ARTIFACT_ZONED_TRIPS = "zoned_trips.csv"
ARTIFACT_NETWORK = "network.tsv"
ARTIFACT_METRICS = "metrics.json"
ARTIFACT_HISTOGRAM = "weights.tsv"
ARTIFACT_BINNED = "weights_binned.tsv"
ARTIFACT_FIT = "fit.json"
ARTIFACT_DISTRIBUTION_SVG = "weights.svg"
ARTIFACT_SUMMARY = "summary.json"

SYNTH_TRIPS_FILE = "trips.csv"
SYNTH_ZONES_FILE = "zones.geojson"

EXPERIMENT_REPORT_FILE = "experiment.json"
EXPERIMENT_TABLE_FILE = "experiment.tsv"
RADAR_REPORT_FILE = "radar.json"

# ============================================================================
# EXIT CODES
# ============================================================================

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INTERNAL_ERROR = 2
