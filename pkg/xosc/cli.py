"""Command-line driver: ``xosc locate | simulate | sweep``.

Exit codes: 0 when a verdict (of any kind) was produced or the command
finished, 2 for input errors, 3 for anything unexpected.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from .config import FrequencyBand, PipelineConfig
from .errors import ConfigError, XoscError
from .io import load_csv, load_geo, load_shape, write_csv, write_json, write_report
from .locate import locate_source
from .signal import select_window
from .simgrid import make_scenario, scenario_channels
from .sweep import run_sweep

logger = logging.getLogger("xosc")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def parse_window(text: str) -> tuple[float, float]:
    """Parse ``"t0:t1"`` seconds."""
    try:
        t0, t1 = (float(v) for v in text.split(":"))
    except ValueError as err:
        raise ConfigError(f"window must look like 't0:t1', got {text!r}") from err
    if not t0 < t1:
        raise ConfigError(f"window start must precede its end, got {text!r}")
    return t0, t1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xosc", description=__doc__.splitlines()[0])
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    locate = commands.add_parser("locate", help="locate a forced-oscillation source")
    locate.add_argument("--input", required=True, type=Path, help="channel CSV")
    locate.add_argument("--forced-window", required=True, metavar="T0:T1")
    natural = locate.add_mutually_exclusive_group(required=True)
    natural.add_argument("--ringdown-window", metavar="T0:T1")
    natural.add_argument("--baseline", type=Path, help="natural mode-shape file")
    locate.add_argument("--band", metavar="LO:HI", help="search band in Hz")
    locate.add_argument("--geo", type=Path, help="CSV with channel,lat,lon")
    locate.add_argument("--config", type=Path, help="JSON pipeline configuration")
    locate.add_argument("--reference", help="phase reference channel")
    locate.add_argument(
        "--weighted", action="store_true", help="magnitude-weighted alignment"
    )
    locate.add_argument(
        "--trim-common",
        action="store_true",
        help="cut channels to the window where all of them have samples",
    )
    locate.add_argument("--report", required=True, type=Path)
    locate.add_argument("--plot", type=Path, help="SVG compass plot")

    simulate = commands.add_parser("simulate", help="generate a scenario CSV")
    simulate.add_argument("--buses", type=int, default=10)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--offset", type=float, default=0.0, help="Hz")
    simulate.add_argument("--duration", type=float, default=120.0)
    simulate.add_argument("--sample-rate", type=float, default=10.0)
    simulate.add_argument("--snr", type=float, default=20.0, help="dB")
    simulate.add_argument(
        "--ringdown", type=float, default=0.0, help="seconds of ring-down to append"
    )
    simulate.add_argument("--out", required=True, type=Path)
    simulate.add_argument("--truth", required=True, type=Path)

    sweep = commands.add_parser("sweep", help="run seeded localisation trials")
    sweep.add_argument("--trials", type=int, default=200)
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--buses", type=int, default=10)
    sweep.add_argument("--max-offset", type=float, default=0.02)
    sweep.add_argument("--config", type=Path)
    sweep.add_argument("--n-jobs", type=int, default=1)
    sweep.add_argument("--progress", action="store_true")
    sweep.add_argument("--out", required=True, type=Path)
    return parser


def _config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    return config.replace(
        band=FrequencyBand.parse(args.band) if getattr(args, "band", None) else None,
        reference_channel=getattr(args, "reference", None),
        weighted_alignment=True if getattr(args, "weighted", False) else None,
    )


def _locate(args: argparse.Namespace) -> int:
    config = _config(args)
    channels = load_csv(args.input, trim_common=args.trim_common)
    forced = select_window(channels, *parse_window(args.forced_window))
    ringdown = baseline = None
    if args.ringdown_window:
        ringdown = select_window(channels, *parse_window(args.ringdown_window))
    else:
        baseline = load_shape(args.baseline)
    geo = load_geo(args.geo) if args.geo else None

    report = locate_source(
        forced, ringdown=ringdown, baseline=baseline, config=config, geo=geo
    )
    write_report(report, args.report)
    if args.plot and report.alignment is not None:
        from .plotting import render_compass

        render_compass(
            report.forced_shape, report.natural_shape, report.alignment, args.plot
        )
    elif args.plot:
        logger.warning("no compass plot: the run stopped before alignment")

    channels_text = ", ".join(report.verdict.channels) or "-"
    print(f"{report.verdict.kind.value}: {channels_text}")
    return EXIT_OK


def _simulate(args: argparse.Namespace) -> int:
    scenario = make_scenario(args.buses, args.seed, args.offset)
    channels = scenario_channels(
        scenario,
        duration=args.duration,
        sample_rate=args.sample_rate,
        snr_db=args.snr,
        seed=args.seed,
        ringdown_seconds=args.ringdown,
    )
    write_csv(channels, args.out)
    truth = scenario.to_dict()
    truth["recording"] = {
        "duration": args.duration,
        "sample_rate": args.sample_rate,
        "snr_db": args.snr,
        "forcing_off_at": args.duration if args.ringdown > 0 else None,
        "ringdown_seconds": args.ringdown,
    }
    write_json(truth, args.truth)
    print(f"source: {scenario.source_channel}")
    return EXIT_OK


def _sweep(args: argparse.Namespace) -> int:
    summary = run_sweep(
        args.trials,
        args.seed,
        args.out,
        n_buses=args.buses,
        max_offset=args.max_offset,
        config=PipelineConfig.from_file(args.config) if args.config else None,
        n_jobs=args.n_jobs,
        progress=args.progress,
    )
    print(
        f"single-source {summary.single_source_rate:.3f}, "
        f"top-2 {summary.top2_rate:.3f}, distortion {summary.distortion_rate:.3f}"
    )
    return EXIT_OK


_COMMANDS = {"locate": _locate, "simulate": _simulate, "sweep": _sweep}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        return _COMMANDS[args.command](args)
    except (XoscError, OSError) as err:
        logger.error("%s", err)
        return EXIT_INPUT
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
