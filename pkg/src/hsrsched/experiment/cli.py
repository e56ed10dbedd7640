"""Command-line entry point: ``hsrsched [--config FILE] [overrides...]``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import List, Optional, Sequence

from ..errors import ConfigurationError, ScheduleValidationError
from .config import ExperimentConfig, SweepSpec, load_config
from .report import write_report
from .sweep import run_sweep


def _csv_list(text: str) -> List[str]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    return items


def _seeds(text: str) -> List[int]:
    try:
        return [int(t) for t in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be integers: {text!r}") from None


def _sweep(text: str) -> SweepSpec:
    var, sep, values = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("expected VAR=v1,v2,...")
    try:
        nums = tuple(float(v) for v in _csv_list(values))
        return SweepSpec(var.strip(), nums)
    except (ValueError, ConfigurationError) as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hsrsched",
        description="Run scheduling sweeps for a UAV-assisted mmWave railway cell and write CSV reports.",
    )
    p.add_argument("--config", metavar="PATH", help="YAML experiment config (omitted keys take defaults)")
    p.add_argument("--scheme", type=_csv_list, metavar="NAME[,NAME...]", help="uav_assisted, qos_concurrent, mqis")
    p.add_argument("--flows", type=int, metavar="N", help="requested flows per scenario")
    p.add_argument("--slots", type=int, metavar="M", help="transmission slots per frame")
    p.add_argument("--uav-distance", type=float, metavar="METERS", help="along-track UAV-BS distance")
    p.add_argument("--seed", type=_seeds, metavar="N[,N...]", help="scenario seeds")
    p.add_argument("--sweep", type=_sweep, metavar="VAR=v1,v2,...", help="flow_count, slot_count or uav_distance")
    p.add_argument("--output", metavar="DIR", help="directory for runs.csv and aggregate.csv")
    return p


def apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    scenario, frame = cfg.scenario, cfg.frame
    if args.flows is not None:
        scenario = replace(scenario, flow_count=args.flows)
    if args.uav_distance is not None:
        scenario = replace(scenario, uav_distance=args.uav_distance)
    if args.slots is not None:
        frame = replace(frame, slot_count=args.slots)
    changes = dict(scenario=scenario, frame=frame)
    if args.scheme is not None:
        changes["schemes"] = tuple(args.scheme)
    if args.seed is not None:
        changes["seeds"] = tuple(args.seed)
    if args.sweep is not None:
        changes["sweep"] = args.sweep
    if args.output is not None:
        changes["output"] = args.output
    return replace(cfg, **changes)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        cfg = apply_overrides(cfg, args)
    except ConfigurationError as e:
        print(f"hsrsched: configuration error: {e}", file=sys.stderr)
        return 2
    try:
        report = run_sweep(cfg)
    except ScheduleValidationError as e:
        print(f"hsrsched: schedule validation failed: {e}", file=sys.stderr)
        return 1
    try:
        runs, agg = write_report(report, cfg.output)
    except OSError as e:
        print(f"hsrsched: {e}", file=sys.stderr)
        return 1
    for a in report.aggregates:
        (flows, _), (tput, _) = a.get("completed_flows"), a.get("system_throughput_mbps")
        print(f"{a.sweep_var}={a.sweep_value:g} {a.scheme:<15} flows={flows:.2f} throughput={tput:.1f} Mbps")
    print(f"wrote {runs} and {agg}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
