"""
OD Network Toolkit - Command Line Application
Main entry point: python app.py <subcommand> [options]
"""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import List, Optional

from src import __version__, config
from src.core import charts, experiment, formats, radar, reference
from src.core.pipeline import assign_trip_table, load_pipeline_config, run_pipeline
from src.errors import DegenerateX, InsufficientData, ToolkitError
from src.geo import zoning
from src.models import gravity
from src.network import distfit, metrics, odnet

logger = logging.getLogger("odnet")


def setup_logging(verbose: bool = False, quiet: bool = False):
    """Single stderr handler on the root logger."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    handler = logging.StreamHandler(stream=sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s | %(name)s | %(message)s"))
    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level)


# ============================================================================
# SUBCOMMANDS
# ============================================================================

def cmd_convert(args) -> int:
    table = formats.read_trip_table(args.input)
    if args.to == "geo":
        result = formats.trips_to_geographic(table, "utm", args.zone, args.hemisphere, args.datum)
    else:
        result, zone, hemisphere, out_of_zone = formats.trips_to_utm(table, args.zone, args.hemisphere, args.datum)
        logger.info(f"Projected into UTM zone {zone}{hemisphere[0].upper()}")
        if out_of_zone:
            logger.warning(f"{out_of_zone} point(s) lie beyond the zone's nominal width")
    formats.write_trip_table(result, args.output)
    logger.info(f"Wrote {len(result)} records to {args.output}")
    return config.EXIT_OK


def cmd_assign(args) -> int:
    table = formats.read_trip_table(args.trips)
    table = formats.trips_to_geographic(table, args.coords, args.zone, args.hemisphere, args.datum)
    zones = zoning.load_zones(args.zones)
    if args.mapping:
        zones = zoning.aggregate_zones(zones, zoning.load_zone_mapping(args.mapping))
    index = zoning.build_index(zones, args.index)
    zoned, dropped, _ = assign_trip_table(table, index, args.threads)
    formats.write_zoned_trips(zoned, args.output)
    logger.info(f"Assigned {len(zoned)} records ({dropped} dropped) to {args.output}")
    return config.EXIT_OK


def cmd_build(args) -> int:
    zoned = formats.read_zoned_trips(args.input)
    extra_nodes = zoning.load_zones(args.all_zones).ids if args.all_zones else ()
    network = odnet.build_network(
        formats.zoned_trips(zoned),
        include_self_loops=not args.no_self_loops,
        extra_nodes=extra_nodes,
        workers=args.threads,
    )
    formats.write_edge_list(network, args.output)
    logger.info(f"Wrote {network!r} to {args.output}")
    return config.EXIT_OK


def cmd_metrics(args) -> int:
    network = formats.read_edge_list(args.input)
    report = metrics.compute_metrics(network)
    name = args.name or Path(args.input).stem
    formats.write_report(report, args.output, name, formats.provenance(args.input, {}))
    logger.info(f"{name}: N={report.N}, L={report.L}, T={report.T}, W={report.W:.4f}")
    return config.EXIT_OK


def cmd_dist(args) -> int:
    histogram = distfit.weight_histogram(formats.read_edge_list(args.input))
    formats.write_histogram(histogram, args.output)
    if args.binned or args.svg:
        binned = distfit.bin_distribution(histogram, args.binning, args.bins_per_decade)
        if args.binned:
            formats.write_binned(binned, args.binned)
        if args.svg:
            try:
                fit = distfit.fit_power_law(binned)
            except (InsufficientData, DegenerateX) as e:
                logger.warning(f"Drawing bins without a fitted line: {e}")
                fit = None
            charts.render_distribution_svg(binned, fit, args.svg, title=Path(args.input).stem)
    logger.info(f"{len(histogram)} distinct weights written to {args.output}")
    return config.EXIT_OK


def cmd_fit(args) -> int:
    histogram = distfit.weight_histogram(formats.read_edge_list(args.input))
    binned = distfit.bin_distribution(histogram, args.binning, args.bins_per_decade)
    fit = distfit.fit_power_law(binned)
    verdict = distfit.scale_free_verdict(fit, args.min_decades, args.min_r2)
    formats.write_json(formats.fit_document(fit, verdict, args.min_decades, args.min_r2), args.output)
    if args.svg:
        charts.render_distribution_svg(binned, fit, args.svg, title=Path(args.input).stem)
    logger.info(f"alpha={fit.alpha:.4f}, r2={fit.r_squared:.4f}, "
                f"decades={fit.decades_spanned:.2f}, verdict={verdict.value}")
    return config.EXIT_OK


def cmd_radar(args) -> int:
    reports = [formats.read_report(path) for path in args.reports]
    reports += [(name, reference.reference_report(name)) for name in args.reference]
    data = radar.radar_export(reports)
    formats.write_json(data.to_dict(), args.output)
    if args.svg:
        radar.render_radar_svg(data, args.svg, title=args.title)
    logger.info(f"Radar of {len(data.cities)} cities written to {args.output}")
    return config.EXIT_OK


def cmd_synth(args) -> int:
    if args.config:
        synth = gravity.load_synth_config(args.config)
    elif args.pole_count == 1:
        synth = gravity.monocentric_config()
    else:
        synth = gravity.polycentric_config(args.pole_count)
    overrides = {key: value for key, value in (("seed", args.seed), ("trips", args.trips)) if value is not None}
    synth = dataclasses.replace(synth, **overrides)

    output = gravity.generate_city(synth)
    output_dir = Path(args.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    formats.write_trip_table(output.trip_table, output_dir / config.SYNTH_TRIPS_FILE)
    formats.write_zones_geojson(output.zones, output_dir / config.SYNTH_ZONES_FILE)
    logger.info(f"Synthetic city written to {output_dir}")
    return config.EXIT_OK


def cmd_pipeline(args) -> int:
    pipeline_config = load_pipeline_config(args.config)
    overrides = {
        "output_dir": Path(args.output_dir) if args.output_dir else None,
        "threads": args.threads,
        "bins_per_decade": args.bins_per_decade,
        "min_decades": args.min_decades,
        "min_r_squared": args.min_r2,
        "include_self_loops": False if args.no_self_loops else None,
    }
    pipeline_config = dataclasses.replace(
        pipeline_config, **{key: value for key, value in overrides.items() if value is not None}
    )
    bundle = run_pipeline(pipeline_config)
    logger.info(f"Artifacts written to {bundle.output_dir}")
    return config.EXIT_OK


def cmd_experiment(args) -> int:
    outcomes = experiment.run_conjecture_experiment(
        args.output_dir,
        trips=args.trips,
        seed=args.seed,
        grid_side=args.grid_side,
        pole_count=args.pole_count,
        bins_per_decade=args.bins_per_decade,
        min_decades=args.min_decades,
        min_r_squared=args.min_r2,
        threads=args.threads,
    )
    for outcome in outcomes:
        row = outcome.row()
        logger.info(f"{row['city']}: alpha={row['alpha']}, r2={row['r_squared']}, verdict={row['verdict']}")
    return config.EXIT_OK


# ============================================================================
# ARGUMENT PARSING
# ============================================================================

class ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors with the input-error exit code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(config.EXIT_INPUT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    verbosity = argparse.ArgumentParser(add_help=False)
    group = verbosity.add_mutually_exclusive_group()
    group.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    group.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")

    threads = argparse.ArgumentParser(add_help=False)
    threads.add_argument("--threads", type=int, default=1, help="Worker threads (default: 1)")

    utm = argparse.ArgumentParser(add_help=False)
    utm.add_argument("--zone", type=int, help="File-wide UTM zone (1-60)")
    utm.add_argument("--hemisphere", choices=("north", "south"), help="File-wide UTM hemisphere")
    utm.add_argument("--datum", choices=sorted(config.DATUMS), default=config.DEFAULT_DATUM)

    binning = argparse.ArgumentParser(add_help=False)
    binning.add_argument("--binning", choices=config.BINNING_KINDS, default=config.DEFAULT_BINNING)
    binning.add_argument("--bins-per-decade", type=int, default=config.DEFAULT_BINS_PER_DECADE)

    thresholds = argparse.ArgumentParser(add_help=False)
    thresholds.add_argument("--min-decades", type=float, default=config.DEFAULT_MIN_DECADES)
    thresholds.add_argument("--min-r2", type=float, default=config.DEFAULT_MIN_R_SQUARED)

    parser = ArgumentParser(
        prog="odnet",
        description="Origin-destination trips to weighted directed networks, metrics and power-law fits.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", metavar="<command>")
    commands.required = True

    p = commands.add_parser("convert", parents=[verbosity, utm], help="Convert a trip CSV between UTM and degrees")
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--to", choices=formats.COORD_SYSTEMS, required=True, help="Target coordinate system")
    p.set_defaults(handler=cmd_convert)

    p = commands.add_parser("assign", parents=[verbosity, utm, threads], help="Resolve trip endpoints to zones")
    p.add_argument("trips", type=Path)
    p.add_argument("zones", type=Path, help="Zone GeoJSON FeatureCollection")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--coords", choices=formats.COORD_SYSTEMS, default="geo")
    p.add_argument("--mapping", type=Path, help="zone_id,group_id CSV aggregating zones")
    p.add_argument("--index", choices=config.INDEX_KINDS, default=config.DEFAULT_INDEX)
    p.set_defaults(handler=cmd_assign)

    p = commands.add_parser("build", parents=[verbosity, threads], help="Aggregate zoned trips into an edge list")
    p.add_argument("input", type=Path, help="Zoned trips CSV")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--no-self-loops", action="store_true", help="Discard intra-zone trips")
    p.add_argument("--all-zones", type=Path, metavar="ZONES", help="Add every zone of this GeoJSON as a node")
    p.set_defaults(handler=cmd_build)

    p = commands.add_parser("metrics", parents=[verbosity], help="Structural metrics report")
    p.add_argument("input", type=Path, help="Edge list TSV")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--name", help="City name (default: input file stem)")
    p.set_defaults(handler=cmd_metrics)

    p = commands.add_parser("dist", parents=[verbosity, binning], help="Edge-weight histogram")
    p.add_argument("input", type=Path, help="Edge list TSV")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--binned", type=Path, help="Also write the binned distribution here")
    p.add_argument("--svg", type=Path, help="Also draw the binned distribution (log-log)")
    p.set_defaults(handler=cmd_dist)

    p = commands.add_parser("fit", parents=[verbosity, binning, thresholds], help="Power-law fit and verdict")
    p.add_argument("input", type=Path, help="Edge list TSV")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--svg", type=Path, help="Also draw the bins with the fitted line")
    p.set_defaults(handler=cmd_fit)

    p = commands.add_parser("radar", parents=[verbosity], help="Compare metric reports on the radar axes")
    p.add_argument("reports", type=Path, nargs="*", help="Metric report JSON files")
    p.add_argument("--reference", action="append", default=[], choices=reference.reference_names(),
                   help="Include a published reference city (repeatable)")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--svg", type=Path, help="Also draw the radar chart")
    p.add_argument("--title", default="")
    p.set_defaults(handler=cmd_radar)

    p = commands.add_parser("synth", parents=[verbosity], help="Generate a synthetic grid city")
    p.add_argument("-o", "--output-dir", type=Path, required=True)
    p.add_argument("--config", type=Path, help="Synth config JSON")
    p.add_argument("--pole-count", type=int, default=1, help="Poles when no config is given (square number)")
    p.add_argument("--trips", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_synth)

    p = commands.add_parser("pipeline", parents=[verbosity], help="Run every stage from a pipeline config")
    p.add_argument("config", type=Path, help="Pipeline config JSON")
    p.add_argument("-o", "--output-dir", type=Path)
    p.add_argument("--threads", type=int)
    p.add_argument("--bins-per-decade", type=int)
    p.add_argument("--min-decades", type=float)
    p.add_argument("--min-r2", type=float)
    p.add_argument("--no-self-loops", action="store_true")
    p.set_defaults(handler=cmd_pipeline)

    p = commands.add_parser("experiment", parents=[verbosity, threads, thresholds],
                            help="Monocentric vs polycentric synthetic comparison")
    p.add_argument("-o", "--output-dir", type=Path, required=True)
    p.add_argument("--trips", type=int, default=config.SYNTH_TRIPS)
    p.add_argument("--seed", type=int, default=config.SYNTH_SEED)
    p.add_argument("--grid-side", type=int, default=config.SYNTH_GRID_SIDE)
    p.add_argument("--pole-count", type=int, default=9)
    p.add_argument("--bins-per-decade", type=int, default=config.DEFAULT_BINS_PER_DECADE)
    p.set_defaults(handler=cmd_experiment)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run one subcommand and map failures to exit codes.

    Returns:
        0 on success, 1 for input errors, 2 for internal errors
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.quiet)

    try:
        return args.handler(args)
    except ToolkitError as e:
        logger.error(str(e))
        return e.exit_code
    except Exception as e:
        logger.error(f"Internal error: {e}")
        logger.debug("Traceback:", exc_info=True)
        return config.EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
