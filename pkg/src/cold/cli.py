"""Command line interface: ``cold run | bench | report``."""

import argparse
from dataclasses import replace
import logging
import os
from pathlib import Path
import sys

import numpy as np

from .exceptions import EndOfRoadError
from .scenario import load_scenario
from .sim import Simulation, format_summary, frames_csv, read_frames_csv

log = logging.getLogger("cold")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class ConfigError(Exception):
    pass


def _configure_logging():
    level = os.environ.get("COLD_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")


def _on_off(value):
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _build(args, mode="auto", codec=False):
    """Load the scenario and set up the simulation; any failure is a config error."""
    try:
        cfg = load_scenario(args.scenario)
        overrides = {}
        if getattr(args, "seed", None) is not None:
            overrides["seed"] = args.seed
        if getattr(args, "frames", None) is not None:
            overrides["frames"] = args.frames
        cfg = replace(cfg, **overrides)
        return Simulation(cfg, mode, codec)
    except (OSError, ValueError, EndOfRoadError) as exc:
        raise ConfigError(str(exc)) from exc


def cmd_run(args):
    sim = _build(args, args.mode, args.codec)
    result = sim.run()
    if not result.reports:
        raise RuntimeError("scenario produced no frames")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "frames.csv").write_text(frames_csv(result.reports))
    summary = format_summary(result.reports, Path(args.scenario).stem)
    (out / "summary.txt").write_text(summary)
    print(summary, end="")
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_bench(args):
    sim = _build(args)
    runs = {}
    for _ in range(args.repeat):
        for r in sim.run().reports:
            runs.setdefault(r.mode, []).append(r.runtime_us / 1000.0)
    print(f"Runtime per frame [ms] over {args.repeat} run(s)")
    print(f"{'':<20}{'mean':>10}{'sigma':>10}{'max':>10}{'frames':>8}")
    for mode in ("convoy", "spline", "local"):
        if mode in runs:
            v = np.array(runs[mode])
            label = mode.capitalize() + " fusion"
            print(f"{label:<20}{v.mean():>10.2f}{v.std():>10.2f}{v.max():>10.2f}{v.size:>8}")
    return EXIT_OK


def cmd_report(args):
    directory = Path(args.dir)
    files = sorted(directory.glob("*.csv")) if directory.is_dir() else []
    if not files:
        raise ConfigError(f"no CSV files in {directory}")
    reports = []
    for f in files:
        reports.extend(read_frames_csv(f.read_text()))
    print(format_summary(reports, directory.name), end="")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="cold", description="Collective lane detection simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write frames.csv and summary.txt")
    run.add_argument("scenario")
    run.add_argument("--out", default="out")
    run.add_argument("--codec", type=_on_off, default=False, metavar="on|off")
    run.add_argument("--mode", choices=("auto", "convoy", "spline"), default="auto")
    run.add_argument("--seed", type=int)
    run.add_argument("--frames", type=int)
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="runtime statistics per fusion mode")
    bench.add_argument("scenario")
    bench.add_argument("--repeat", type=int, default=1)
    bench.set_defaults(func=cmd_bench)

    report = sub.add_parser("report", help="aggregate frames CSVs of a run directory")
    report.add_argument("dir")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"cold: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.debug("run failed", exc_info=True)
        print(f"cold: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
