"""Config loading, sweeps, CSV reports and the command-line entry point."""

from .config import ExperimentConfig, SweepSpec, dump_config, load_config, parse_config
from .report import write_report
from .sweep import Aggregate, RunRecord, SweepReport, run_one, run_sweep

__all__ = [
    "Aggregate",
    "ExperimentConfig",
    "RunRecord",
    "SweepReport",
    "SweepSpec",
    "dump_config",
    "load_config",
    "parse_config",
    "run_one",
    "run_sweep",
    "write_report",
]
