"""Monte-Carlo sweeps over flow count, frame length or UAV distance."""

from __future__ import annotations

import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Sequence, Tuple

from ..baselines import schedule_mqis, schedule_qos_concurrent
from ..errors import ScheduleValidationError
from ..relay_decision import decide_all
from ..scenario import build_scenario
from ..scheduler import ScheduleResult, SchedulerConfig, schedule_frame, validate_schedule
from ..world import World
from .config import ExperimentConfig

THREADS_ENV = "HSR_SCHED_THREADS"
METRICS = ("completed_flows", "system_throughput_mbps", "total_slots_used")


@dataclass(frozen=True)
class RunRecord:
    sweep_var: str
    sweep_value: float
    scheme: str
    seed: int
    completed_flows: int
    system_throughput_mbps: float
    total_slots_used: int


@dataclass(frozen=True)
class Aggregate:
    sweep_var: str
    sweep_value: float
    scheme: str
    runs: int
    mean: Tuple[float, ...]  # in METRICS order
    std: Tuple[float, ...]  # sample std; 0 for a single run

    def get(self, metric: str) -> Tuple[float, float]:
        k = METRICS.index(metric)
        return self.mean[k], self.std[k]


@dataclass(frozen=True)
class SweepReport:
    config: ExperimentConfig
    runs: Tuple[RunRecord, ...]
    aggregates: Tuple[Aggregate, ...]

    def aggregate(self, value: float, scheme: str) -> Aggregate:
        for a in self.aggregates:
            if a.sweep_value == value and a.scheme == scheme:
                return a
        raise KeyError((value, scheme))

    def means(self, scheme: str, metric: str = "completed_flows") -> List[float]:
        """Mean of ``metric`` for ``scheme`` at each sweep value, in sweep order."""
        return [a.get(metric)[0] for a in self.aggregates if a.scheme == scheme]


def run_scheme(scheme: str, world: World, config: SchedulerConfig = SchedulerConfig()) -> ScheduleResult:
    flows = list(world.scenario.flows)
    if scheme == "uav_assisted":
        return schedule_frame(decide_all(flows, world), world, config)
    if scheme == "qos_concurrent":
        return schedule_qos_concurrent(flows, world, config)
    if scheme == "mqis":
        return schedule_mqis(flows, world, config)
    raise ValueError(f"unknown scheme {scheme!r}")


def point_config(cfg: ExperimentConfig, variable: str, value: float):
    """Scenario and frame with the swept variable set to ``value``."""
    scenario, frame = cfg.scenario, cfg.frame
    if variable == "flow_count":
        scenario = replace(scenario, flow_count=int(value))
    elif variable == "slot_count":
        frame = replace(frame, slot_count=int(value))
    elif variable == "uav_distance":
        scenario = replace(scenario, uav_distance=float(value))
    else:
        raise ValueError(f"unknown sweep variable {variable!r}")
    return scenario, frame


def run_one(cfg: ExperimentConfig, variable: str, value: float, scheme: str, seed: int) -> RunRecord:
    """Build, schedule and validate one run; raises on any constraint violation."""
    scenario_cfg, frame = point_config(cfg, variable, value)
    world = World(build_scenario(scenario_cfg, seed), cfg.channel, frame)
    result = run_scheme(scheme, world, cfg.scheduler)
    violations = validate_schedule(result, world)
    if violations:
        raise ScheduleValidationError(violations, f"{scheme} {variable}={value} seed={seed}: ")
    m = result.metrics
    throughput = result.completed_only_throughput if cfg.completed_only else m.system_throughput
    return RunRecord(variable, value, scheme, seed, m.completed_flows, throughput / 1e6, m.total_slots_used)


def worker_count(jobs: int) -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError(f"{THREADS_ENV} must be >= 0")
    if n == 0:
        n = os.cpu_count() or 1
    return max(1, min(n, jobs))


def _job(args):
    return run_one(*args)


def aggregate(runs: Sequence[RunRecord], schemes: Sequence[str]) -> Tuple[Aggregate, ...]:
    groups: Dict[Tuple[float, str], List[RunRecord]] = {}
    for r in runs:
        groups.setdefault((r.sweep_value, r.scheme), []).append(r)
    order = {s: k for k, s in enumerate(schemes)}
    out = []
    for (value, scheme), rs in sorted(groups.items(), key=lambda kv: (kv[0][0], order[kv[0][1]])):
        means, stds = [], []
        for metric in METRICS:
            xs = [float(getattr(r, metric)) for r in rs]
            means.append(math.fsum(xs) / len(xs))
            stds.append(statistics.stdev(xs) if len(xs) > 1 else 0.0)
        out.append(Aggregate(rs[0].sweep_var, value, scheme, len(rs), tuple(means), tuple(stds)))
    return tuple(out)


def run_sweep(cfg: ExperimentConfig) -> SweepReport:
    """Every (sweep value, scheme, seed) run, validated, plus per-point statistics.

    Runs are spread over a process pool capped by ``HSR_SCHED_THREADS``; the
    report is ordered by (value, scheme, seed) whatever the completion order.
    """
    variable, values = cfg.points()
    jobs = [(cfg, variable, v, s, seed) for v in values for s in cfg.schemes for seed in cfg.seeds]
    n = worker_count(len(jobs))
    if n == 1:
        runs = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            runs = list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * n))))
    order = {s: k for k, s in enumerate(cfg.schemes)}
    runs.sort(key=lambda r: (r.sweep_value, order[r.scheme], r.seed))
    return SweepReport(cfg, tuple(runs), aggregate(runs, cfg.schemes))
