"""Comparison schedulers that cannot use the UAV.

Both are short renderings of published comparison schemes, built on the same
slot engine as :func:`hsrsched.scheduler.schedule_frame`; they are not full
re-implementations.

* ``qos_concurrent``: every flow is offered directly from the BS. Flows whose
  direct link is infeasible or insecure are dropped; the rest are admitted
  concurrently in priority order.
* ``mqis``: direct links are partitioned into independent sets of a pairwise
  conflict graph, and a set only starts once every link of the sets before it
  is finished (or can no longer be admitted even on its own).
"""

from __future__ import annotations

import enum
import math
from typing import Dict, Iterable, List, Sequence

import networkx as nx

from .channel import FrameConfig
from .relay_decision import direct_only
from .scenario import Flow
from .scheduler import (
    Gate,
    ScheduleResult,
    SchedulerConfig,
    _Engine,
    check_contention,
    priority_value,
    run_engine,
)
from .world import World


class BaselineKind(enum.Enum):
    QOS_CONCURRENT = "qos_concurrent"
    MQIS = "mqis"


def schedule_qos_concurrent(
    flows: Iterable[Flow], world: World, config: SchedulerConfig = SchedulerConfig()
) -> ScheduleResult:
    flows = list(flows)
    decisions = direct_only(flows, world)
    return run_engine(BaselineKind.QOS_CONCURRENT.value, world, decisions, config, flow_ids=[f.id for f in flows])


def conflict_graph(link_ids: Sequence[int], world: World) -> nx.Graph:
    """Edge between two links that cannot share slot 0 on their own."""
    g = nx.Graph()
    g.add_nodes_from(link_ids)
    full = {i: world.links[i].demand for i in link_ids}
    for n, a in enumerate(link_ids):
        for b in link_ids[n + 1:]:
            ok = check_contention(world.links[a], [b], world, 0, full) and check_contention(
                world.links[b], [a], world, 0, full
            )
            if not ok:
                g.add_edge(a, b)
    return g


def independent_sets(graph: nx.Graph, priority: Dict[int, float]) -> List[List[int]]:
    """Greedy partition: repeatedly take the highest-priority vertex, drop its neighbours."""
    order = sorted(graph.nodes, key=lambda i: (-priority[i], i))
    remaining = list(order)
    sets: List[List[int]] = []
    while remaining:
        chosen: List[int] = []
        blocked = set()
        for v in remaining:
            if v in blocked:
                continue
            chosen.append(v)
            blocked.update(graph.neighbors(v))
        sets.append(chosen)
        taken = set(chosen)
        remaining = [v for v in remaining if v not in taken]
    return sets


class _SetGate(Gate):
    """Admit only links of the current independent set (and unfinished earlier ones)."""

    def __init__(self, sets: List[List[int]]):
        self.sets = sets
        self.index_of = {i: k for k, s in enumerate(sets) for i in s}
        self.current = 0

    def allows(self, link_id: int) -> bool:
        return self.index_of[link_id] <= self.current

    def _stuck(self, engine: _Engine, link_id: int, slot: int) -> bool:
        if link_id in engine.done or link_id in engine.active:
            return link_id in engine.done
        residual = {link_id: engine.residual(link_id, slot)}
        return not check_contention(engine.links[link_id], (), engine.world, slot, residual)

    def update(self, engine: _Engine, slot: int) -> None:
        while self.current < len(self.sets) - 1 and all(
            self._stuck(engine, i, slot) for i in self.sets[self.current]
        ):
            self.current += 1

    def next_event(self, engine: _Engine, slot: int) -> float:
        """Slot at which the last waiting link of the current set stops being admissible alone."""
        if self.current >= len(self.sets) - 1:
            return math.inf
        latest = slot
        M, dt = engine.M, engine.dt
        epoch = engine.world.epoch_of(slot)
        for i in self.sets[self.current]:
            if i in engine.done:
                continue
            if i in engine.active:
                return math.inf  # its completion is already an event
            rate = engine.world.standalone_rate(i, epoch)
            res = engine.residual(i, slot)
            if rate <= 0:
                continue
            # first t with rate * (M - t) * dt < res
            t_dead = math.floor(M - res / (rate * dt)) + 1
            latest = max(latest, t_dead - 1)
        return max(slot + 1, latest)


def schedule_mqis(
    flows: Iterable[Flow], world: World, config: SchedulerConfig = SchedulerConfig()
) -> ScheduleResult:
    flows = list(flows)
    decisions = direct_only(flows, world)
    ids = [world.links_of(f)[0].id for f in decisions.s1]
    priority = {i: priority_value(world.links[i], world.frame, world.standalone_rate(i, 0)) for i in ids}
    sets = independent_sets(conflict_graph(ids, world), priority)
    gate = _SetGate(sets) if sets else None
    result = run_engine(BaselineKind.MQIS.value, world, decisions, config, gate=gate, flow_ids=[f.id for f in flows])
    result.independent_sets = sets
    return result
