"""End-to-end tests for the analysis pipeline and the synthetic-city experiment."""

import json

import pandas as pd
import pytest

from src import config
from src.core import experiment, formats
from src.core.pipeline import PipelineConfig, ProcessingPipeline, load_pipeline_config, run_pipeline
from src.errors import ParseError, StageError
from src.models import gravity
from tests.conftest import write_trips

ARTIFACTS = [
    config.ARTIFACT_TRIPS_GEO,
    config.ARTIFACT_ZONED_TRIPS,
    config.ARTIFACT_NETWORK,
    config.ARTIFACT_METRICS,
    config.ARTIFACT_HISTOGRAM,
    config.ARTIFACT_BINNED,
    config.ARTIFACT_FIT,
    config.ARTIFACT_DISTRIBUTION_SVG,
    config.ARTIFACT_SUMMARY,
]


def write_config(path, **values):
    path.write_text(json.dumps(values), encoding="utf-8")
    return path


@pytest.fixture
def synth_city(tmp_path_factory):
    """g = 11, 10^5 trips, fixed seed."""
    directory = tmp_path_factory.mktemp("synth")
    output = gravity.generate_city(gravity.monocentric_config(trips=100_000))
    formats.write_trip_table(output.trip_table, directory / "trips.csv")
    formats.write_zones_geojson(output.zones, directory / "zones.geojson")
    return directory


def run_synth_pipeline(city_dir, output_name, threads):
    path = write_config(city_dir / f"{output_name}.json", name="synthetic", trips="trips.csv",
                        zones="zones.geojson", output_dir=output_name, threads=threads)
    return run_pipeline(load_pipeline_config(path))


def test_four_trip_fixture(tmp_path, two_squares_path, four_trips_path):
    bundle = run_pipeline(PipelineConfig(trips=four_trips_path, zones=two_squares_path, output_dir=tmp_path / "out"))
    summary = bundle.summary
    assert (summary["metrics"]["N"], summary["metrics"]["L"], summary["metrics"]["T"]) == (2, 2, 4)
    assert summary["counts"]["dropped"] == 0
    assert summary["artifacts"] == sorted(ARTIFACTS[:-1]) + [config.ARTIFACT_SUMMARY]
    for name in ARTIFACTS:
        assert (tmp_path / "out" / name).is_file()

    assert (tmp_path / "out" / config.ARTIFACT_NETWORK).read_text(encoding="utf-8") == "A\tB\t3\nB\tA\t1\n"
    # two distinct weights are too few bins for a regression
    assert summary["fit"] is None
    assert summary["fit_error"]["error"] == "InsufficientData"
    assert json.loads((tmp_path / "out" / config.ARTIFACT_FIT).read_text())["error"] == "InsufficientData"


def test_off_map_trip_is_dropped(tmp_path, two_squares_path):
    trips = write_trips(tmp_path / "trips.csv", [
        (0.5, 0.5, 1.5, 0.5),
        (0.2, 0.2, 1.8, 0.8),
        (0.7, 0.3, 1.2, 0.9),
        (1.5, 0.5, 0.5, 0.5),
        (0.5, 0.5, 10.0, 10.0),
    ])
    bundle = run_pipeline(PipelineConfig(trips=trips, zones=two_squares_path, output_dir=tmp_path / "out"))
    assert bundle.summary["counts"]["dropped"] == 1
    assert bundle.summary["counts"]["records_read"] == 5
    assert bundle.report.T == 4
    zoned = pd.read_csv(tmp_path / "out" / config.ARTIFACT_ZONED_TRIPS)
    assert len(zoned) == 4


def test_progress_updates(tmp_path, two_squares_path, four_trips_path):
    pipeline = ProcessingPipeline(PipelineConfig(trips=four_trips_path, zones=two_squares_path,
                                                 output_dir=tmp_path / "out"))
    updates = list(pipeline.process())
    stages = [update["stage"] for update in updates]
    assert stages[0] == "convert"
    assert stages[-1] == "complete"
    assert [s for s in ("convert", "assign", "build", "metrics", "dist", "fit") if s not in stages] == []
    progress = [update["progress"] for update in updates]
    assert progress == sorted(progress)
    assert "bundle" in updates[-1]


def test_stage_attribution(tmp_path, four_trips_path):
    pipeline = ProcessingPipeline(PipelineConfig(trips=four_trips_path, zones=tmp_path / "missing.geojson",
                                                 output_dir=tmp_path / "out"))
    last = list(pipeline.process())[-1]
    assert last["stage"] == "error"
    assert last["error"].stage == "assign"
    assert last["error"].exit_code == config.EXIT_INPUT_ERROR

    with pytest.raises(StageError) as excinfo:
        run_pipeline(PipelineConfig(trips=tmp_path / "none.csv", zones=tmp_path / "missing.geojson",
                                    output_dir=tmp_path / "out"))
    assert excinfo.value.stage == "convert"


def test_zone_aggregation(tmp_path, two_squares_path, four_trips_path):
    mapping = tmp_path / "mapping.csv"
    mapping.write_text("zone_id,group_id\nA,AB\nB,AB\n", encoding="utf-8")
    bundle = run_pipeline(PipelineConfig(
        trips=four_trips_path, zones=two_squares_path, output_dir=tmp_path / "out", mapping=mapping,
    ))
    assert bundle.summary["counts"]["zones"] == 1
    assert (bundle.report.N, bundle.report.L, bundle.report.T) == (1, 1, 4)
    assert bundle.report.delta == 0.0


def test_discarded_self_loops_are_counted(tmp_path, two_squares_path):
    trips = write_trips(tmp_path / "trips.csv", [(0.5, 0.5, 0.6, 0.6), (0.5, 0.5, 1.5, 0.5), (1.2, 0.2, 1.8, 0.8)])
    bundle = run_pipeline(PipelineConfig(trips=trips, zones=two_squares_path, output_dir=tmp_path / "out",
                                         include_self_loops=False))
    assert bundle.summary["counts"]["self_loops_discarded"] == 2
    assert (bundle.report.N, bundle.report.L, bundle.report.T) == (2, 1, 1)


def test_edgeless_network_fails_in_metrics(tmp_path, two_squares_path):
    trips = write_trips(tmp_path / "trips.csv", [(0.5, 0.5, 0.6, 0.6)])
    with pytest.raises(StageError) as excinfo:
        run_pipeline(PipelineConfig(trips=trips, zones=two_squares_path, output_dir=tmp_path / "out",
                                    include_self_loops=False))
    assert excinfo.value.stage == "metrics"


def test_include_all_zones(tmp_path, two_squares_path):
    trips = write_trips(tmp_path / "trips.csv", [(0.5, 0.5, 0.6, 0.6)])
    bundle = run_pipeline(PipelineConfig(trips=trips, zones=two_squares_path, output_dir=tmp_path / "out",
                                         include_all_zones=True))
    assert bundle.network.nodes == ["A", "B"]
    assert bundle.report.N == 2


def test_config_loading(tmp_path):
    path = write_config(tmp_path / "pipeline.json", trips="data/trips.csv", zones="zones.geojson",
                        output_dir="out", bins_per_decade=10)
    loaded = load_pipeline_config(path)
    assert loaded.trips == tmp_path / "data" / "trips.csv"
    assert loaded.output_dir == tmp_path / "out"
    assert loaded.bins_per_decade == 10
    assert loaded.index == config.DEFAULT_INDEX

    with pytest.raises(ParseError, match="colour"):
        load_pipeline_config(write_config(tmp_path / "bad.json", trips="t", zones="z", output_dir="o", colour=1))
    with pytest.raises(ParseError, match="zones"):
        load_pipeline_config(write_config(tmp_path / "short.json", trips="t", output_dir="o"))


@pytest.mark.parametrize("key, value", [
    ("threads", "4"),
    ("threads", 0),
    ("threads", True),
    ("bins_per_decade", 2.5),
    ("min_r_squared", 1.5),
    ("min_decades", "3"),
    ("include_self_loops", "no"),
    ("index", "quadtree"),
    ("coords", "mercator"),
    ("utm_zone", 61),
    ("hemisphere", "east"),
    ("trips", 12),
])
def test_config_value_checks(tmp_path, key, value):
    values = {"trips": "t.csv", "zones": "z.geojson", "output_dir": "out", key: value}
    with pytest.raises(ParseError, match=key):
        load_pipeline_config(write_config(tmp_path / "pipeline.json", **values))


def test_config_numbers_are_coerced(tmp_path):
    loaded = load_pipeline_config(write_config(
        tmp_path / "pipeline.json", trips="t.csv", zones="z.geojson", output_dir="out",
        min_decades=2, min_r_squared=1, utm_zone=None, threads=3,
    ))
    assert loaded.min_decades == 2.0 and isinstance(loaded.min_decades, float)
    assert loaded.min_r_squared == 1.0
    assert loaded.utm_zone is None
    assert loaded.threads == 3


def test_utm_input(tmp_path, two_squares_path):
    # a city near Fortaleza in UTM 24S, zones in degrees
    zones = tmp_path / "zones.geojson"
    square = [[-38.6, -3.8], [-38.5, -3.8], [-38.5, -3.7], [-38.6, -3.7], [-38.6, -3.8]]
    zones.write_text(json.dumps({"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {"id": "S1"}, "geometry": {"type": "Polygon", "coordinates": [square]}},
    ]}), encoding="utf-8")
    geo = write_trips(tmp_path / "geo.csv", [(-38.55, -3.75, -38.52, -3.72), (-38.58, -3.71, -38.51, -3.79)])
    projected, zone, hemisphere, _ = formats.trips_to_utm(formats.read_trip_table(geo))
    formats.write_trip_table(projected, tmp_path / "utm.csv")

    bundle = run_pipeline(PipelineConfig(trips=tmp_path / "utm.csv", zones=zones, output_dir=tmp_path / "out",
                                         coords="utm", utm_zone=zone, hemisphere=hemisphere))
    assert bundle.summary["counts"]["dropped"] == 0
    assert bundle.report.T == 2


def test_deterministic_across_runs_and_threads(synth_city):
    run_synth_pipeline(synth_city, "serial", threads=1)
    run_synth_pipeline(synth_city, "again", threads=1)
    run_synth_pipeline(synth_city, "parallel", threads=8)
    for name in ARTIFACTS:
        serial = (synth_city / "serial" / name).read_bytes()
        assert serial == (synth_city / "again" / name).read_bytes(), name
        assert serial == (synth_city / "parallel" / name).read_bytes(), name


def test_synthetic_city_reconstructs_every_trip(synth_city):
    bundle = run_synth_pipeline(synth_city, "closure", threads=2)
    assert bundle.summary["counts"]["dropped"] == 0
    assert bundle.report.T == 100_000
    assert bundle.report.N == 121
    assert bundle.summary["fit"] is not None


@pytest.mark.slow
def test_experiment_artifact(tmp_path):
    outcomes = experiment.run_conjecture_experiment(tmp_path / "first")
    experiment.run_conjecture_experiment(tmp_path / "second", threads=4)

    assert [o.city for o in outcomes] == ["monocentric", "polycentric"]
    assert [len(o.synth.poles) for o in outcomes] == [1, 9]
    assert sum(p.amplitude for p in outcomes[1].synth.poles) == pytest.approx(outcomes[0].synth.poles[0].amplitude)
    for outcome in outcomes:
        assert outcome.misassigned == 0
        assert outcome.report.T == config.SYNTH_TRIPS
        assert outcome.fit is not None
        assert outcome.verdict is not None

    for name in (config.EXPERIMENT_REPORT_FILE, config.EXPERIMENT_TABLE_FILE):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()

    document = json.loads((tmp_path / "first" / config.EXPERIMENT_REPORT_FILE).read_text(encoding="utf-8"))
    assert [city["city"] for city in document["cities"]] == ["monocentric", "polycentric"]
    for city in document["cities"]:
        assert {"alpha", "r_squared", "decades_spanned", "verdict"} <= set(city)
    table = pd.read_csv(tmp_path / "first" / config.EXPERIMENT_TABLE_FILE, sep="\t")
    assert list(table.columns) == experiment.TABLE_COLUMNS
    assert len(table) == 2
