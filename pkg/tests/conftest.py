"""Shared fixtures: small zone files, trip CSVs and a seeded generator."""

import json
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
import pytest


def square_feature(zone_id: str, x0: float, y0: float, size: float = 1.0) -> Dict:
    ring = [[x0, y0], [x0 + size, y0], [x0 + size, y0 + size], [x0, y0 + size], [x0, y0]]
    return {
        "type": "Feature",
        "properties": {"id": zone_id},
        "geometry": {"type": "Polygon", "coordinates": [ring]},
    }


def feature_collection(features: Sequence[Dict]) -> Dict:
    return {"type": "FeatureCollection", "features": list(features)}


def write_trips(path: Path, rows: List[Sequence[float]], with_count: bool = False) -> Path:
    header = "ox,oy,dx,dy,count" if with_count else "ox,oy,dx,dy"
    lines = [header] + [",".join(repr(float(v)) if i < 4 else str(int(v)) for i, v in enumerate(row)) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def two_squares() -> Dict:
    """Zones A = [0,1]x[0,1] and B = [1,2]x[0,1] sharing the edge x = 1."""
    return feature_collection([square_feature("A", 0.0, 0.0), square_feature("B", 1.0, 0.0)])


@pytest.fixture
def two_squares_path(tmp_path, two_squares) -> Path:
    path = tmp_path / "zones.geojson"
    path.write_text(json.dumps(two_squares), encoding="utf-8")
    return path


@pytest.fixture
def four_trips_path(tmp_path) -> Path:
    """A->B three times, B->A once."""
    return write_trips(tmp_path / "trips.csv", [
        (0.5, 0.5, 1.5, 0.5),
        (0.2, 0.2, 1.8, 0.8),
        (0.7, 0.3, 1.2, 0.9),
        (1.5, 0.5, 0.5, 0.5),
    ])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(20170101))
