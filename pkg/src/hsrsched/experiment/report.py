"""CSV output for sweep reports."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, List, Tuple

from .sweep import METRICS, SweepReport

RUNS_FILE = "runs.csv"
AGGREGATE_FILE = "aggregate.csv"
RUN_HEADER = ("sweep_var", "sweep_value", "scheme", "seed") + METRICS
AGGREGATE_HEADER = ("sweep_var", "sweep_value", "scheme", "runs") + tuple(
    f"{m}_{stat}" for m in METRICS for stat in ("mean", "std")
)


def fmt(x) -> str:
    """Six significant digits, locale-free."""
    if isinstance(x, str):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        x = float(x)
    return "{:.6g}".format(x)


def run_rows(report: SweepReport) -> List[Tuple[str, ...]]:
    return [
        (r.sweep_var, fmt(r.sweep_value), r.scheme, str(r.seed)) + tuple(fmt(getattr(r, m)) for m in METRICS)
        for r in report.runs
    ]


def aggregate_rows(report: SweepReport) -> List[Tuple[str, ...]]:
    rows = []
    for a in report.aggregates:
        stats = []
        for mean, std in zip(a.mean, a.std):
            stats += [fmt(mean), fmt(std)]
        rows.append((a.sweep_var, fmt(a.sweep_value), a.scheme, str(a.runs), *stats))
    return rows


def _write(path: Path, header: Iterable[str], rows: Iterable[Iterable[str]]) -> None:
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as e:
        raise OSError(e.errno, f"cannot write report file {path}: {e.strerror or e}") from e


def write_report(report: SweepReport, directory) -> Tuple[Path, Path]:
    """Write ``runs.csv`` and ``aggregate.csv`` into ``directory`` (created if needed)."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(e.errno, f"cannot create report directory {out}: {e.strerror or e}") from e
    runs, agg = out / RUNS_FILE, out / AGGREGATE_FILE
    _write(runs, RUN_HEADER, run_rows(report))
    _write(agg, AGGREGATE_HEADER, aggregate_rows(report))
    return runs, agg
