"""UAV-assisted concurrent slot scheduler and the schedule validator.

The engine keeps an active set of links that persists across slots; a link
holds its transmit antenna until its residual demand reaches zero. Each slot
it tries to admit waiting BS-band links, then (while no BS->UAV hop is on the
air) waiting UAV-band links, prices the active set with full co-band
interference and drains residuals. A UAV-band link is only admitted once the
BS-band volume sent so far covers everything the UAV has committed to send,
so the UAV never forwards more than the BS has fed it.

Nothing changes between two consecutive "events" (an admission, a completion,
a position refresh, or the slot at which a blocked candidate becomes
admissible), so by default the engine jumps straight from one event to the
next. ``fast=False`` walks every slot and is kept for equivalence testing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .channel import Band, FrameConfig, Link, LinkRole, link_rate, eavesdropper_rate, secrecy_ok
from .relay_decision import DecisionSets
from .world import World


class Reason(enum.Enum):
    NONE = "none"
    HALF_DUPLEX = "half_duplex"
    QOS_CONFLICT = "qos_conflict"
    SECRECY_VIOLATION = "secrecy_violation"
    RECEIVER_BUSY = "receiver_busy"


@dataclass(frozen=True)
class ContentionVerdict:
    compatible: bool
    reason: Reason = Reason.NONE

    def __bool__(self) -> bool:
        return self.compatible


COMPATIBLE = ContentionVerdict(True)


@dataclass(frozen=True)
class SchedulerConfig:
    bs_antennas: int = 3
    uav_antennas: int = 3
    priority_order: str = "descending"  # or "increasing"
    fast: bool = True

    def __post_init__(self):
        if self.bs_antennas < 1 or self.uav_antennas < 1:
            raise ValueError("bs_antennas and uav_antennas must be >= 1")
        if self.priority_order not in ("descending", "increasing"):
            raise ValueError("priority_order must be 'descending' or 'increasing'")


@dataclass(frozen=True)
class Segment:
    """Slots ``[start, stop)`` during which the same links ran at the same rates."""

    start: int
    stop: int
    epoch: int
    rates: Tuple[Tuple[int, float], ...]  # (link id, bit/s), sorted by id

    @property
    def link_ids(self) -> FrozenSet[int]:
        return frozenset(i for i, _ in self.rates)

    @property
    def length(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class Metrics:
    completed_flows: int
    system_throughput: float  # bit/s
    total_slots_used: int


@dataclass
class ScheduleResult:
    scheme: str
    frame: FrameConfig
    config: SchedulerConfig
    segments: List[Segment]
    per_flow_completed: Dict[int, bool]
    delivering_link: Dict[int, Optional[int]]  # flow -> link whose output reaches the MR
    flow_links: Dict[int, Tuple[int, ...]]  # flow -> links the scheme used for it
    metrics: Metrics
    completed_only_throughput: float = 0.0
    independent_sets: Optional[List[List[int]]] = None  # MQIS only

    @property
    def completed_count(self) -> int:
        return sum(self.per_flow_completed.values())

    def per_slot_active_sets(self) -> List[FrozenSet[int]]:
        out: List[FrozenSet[int]] = [frozenset()] * self.frame.slot_count
        for seg in self.segments:
            ids = seg.link_ids
            for t in range(seg.start, seg.stop):
                out[t] = ids
        return out

    def per_link_slot_rates(self) -> Dict[int, List[Tuple[int, int, float]]]:
        """Sparse view: link id -> list of ``(start, stop, rate)`` runs."""
        out: Dict[int, List[Tuple[int, int, float]]] = {}
        for seg in self.segments:
            for i, r in seg.rates:
                out.setdefault(i, []).append((seg.start, seg.stop, r))
        return out

    def delivered(self, link_id: int) -> float:
        dt = self.frame.slot_duration
        return math.fsum(r * dt * (b - a) for a, b, r in self.per_link_slot_rates().get(link_id, ()))


def priority_value(link: Link, frame: FrameConfig, rate: float) -> float:
    """Fraction of a frame's demand one slot at ``rate`` delivers."""
    return rate * frame.slot_duration / link.demand


def check_contention(
    candidate: Link,
    active: Iterable[int],
    world: World,
    slot: int,
    residual: Mapping[int, float],
) -> ContentionVerdict:
    """Whether ``candidate`` may join the links ``active`` in ``slot``.

    ``residual`` maps link id to undelivered bits and must cover the candidate
    and every active link on its band.
    """
    links = world.links
    active = list(active)
    for a in active:
        la = links[a]
        if la.transmitter == candidate.receiver or la.receiver == candidate.transmitter:
            return ContentionVerdict(False, Reason.HALF_DUPLEX)
    for a in active:
        if links[a].receiver == candidate.receiver:
            return ContentionVerdict(False, Reason.RECEIVER_BUSY)

    epoch = world.epoch_of(slot)
    co_band = frozenset(a for a in active if links[a].band is candidate.band)
    joint = co_band | {candidate.id}
    budget = (world.frame.slot_count - slot) * world.frame.slot_duration
    new = world.band_rates(joint, epoch)
    if new[candidate.id] * budget < residual[candidate.id]:
        return ContentionVerdict(False, Reason.QOS_CONFLICT)
    if co_band:
        old = world.band_rates(co_band, epoch)
        for k in co_band:
            # only count links the candidate pushes over their deadline
            if new[k] * budget < residual[k] <= old[k] * budget:
                return ContentionVerdict(False, Reason.QOS_CONFLICT)
    if candidate.band is Band.F1 and not world.all_secure(joint, epoch):
        return ContentionVerdict(False, Reason.SECRECY_VIOLATION)
    return COMPATIBLE


class _Engine:
    """One frame of slot scheduling over the links of a set of flows."""

    def __init__(
        self,
        world: World,
        config: SchedulerConfig,
        f1_links: Sequence[int],
        relayed_flows: Iterable[int] = (),
        gate: Optional["Gate"] = None,
    ):
        self.world = world
        self.cfg = config
        self.frame = world.frame
        self.M = world.frame.slot_count
        self.dt = world.frame.slot_duration
        self.links = world.links
        self.gate = gate
        self.relayed = set(relayed_flows)

        self.sf1: List[int] = self._sorted(f1_links, epoch=0)
        self.sf2: List[int] = []
        self.rank: Dict[int, int] = {}
        self._rerank()

        self.done: Set[int] = set()
        self.delivered: Dict[int, float] = {}
        self.active: Dict[int, Tuple[float, float, int]] = {}  # id -> (base, rate, start)
        self.segments: List[Segment] = []
        self._seg_key: Optional[Tuple[FrozenSet[int], int]] = None
        self._sf2_dirty = False
        self.completed_flows: Set[int] = set()
        self.touched: Set[int] = set()  # links that have been on the air
        self._peak: Dict[int, float] = {}

    # -- bookkeeping ----------------------------------------------------------

    def _sorted(self, ids: Iterable[int], epoch: int) -> List[int]:
        keyed = []
        for i in ids:
            link = self.links[i]
            p = priority_value(link, self.frame, self.world.standalone_rate(i, epoch))
            keyed.append((p, link.flow_id, i))
        if self.cfg.priority_order == "descending":
            keyed.sort(key=lambda x: (-x[0], x[1], x[2]))
        else:
            keyed.sort(key=lambda x: (x[0], x[1], x[2]))
        return [i for _, _, i in keyed]

    def _rerank(self) -> None:
        self.rank = {i: n for n, i in enumerate(self.sf1)}
        base = len(self.sf1)
        self.rank.update({i: base + n for n, i in enumerate(self.sf2)})

    def delivered_at(self, link_id: int, slot: int) -> float:
        seg = self.active.get(link_id)
        if seg is None:
            return self.delivered.get(link_id, 0.0)
        base, rate, start = seg
        return base + rate * self.dt * (slot - start)

    def residual(self, link_id: int, slot: int) -> float:
        return self.links[link_id].demand - self.delivered_at(link_id, slot)

    def _alpha(self) -> bool:
        return any(self.links[i].role is LinkRole.BS_TO_UAV for i in self.active)

    def _count(self, band: Band) -> int:
        return sum(1 for i in self.active if self.links[i].band is band)

    def _restart_segments(self, slot: int, rates: Mapping[int, float]) -> None:
        for i in list(self.active):
            self.active[i] = (self.delivered_at(i, slot), rates[i], slot)

    def _deactivate(self, link_id: int, slot: int) -> None:
        self.delivered[link_id] = self.delivered_at(link_id, slot)
        del self.active[link_id]

    # -- per-slot steps -------------------------------------------------------

    def _evict_insecure(self, slot: int, epoch: int) -> bool:
        evicted = False
        while True:
            f1 = frozenset(i for i in self.active if self.links[i].band is Band.F1)
            if self.world.all_secure(f1, epoch):
                return evicted
            bad = self.world.insecure_links(f1, epoch)
            victim = max(bad, key=lambda i: self.rank[i])
            self._deactivate(victim, slot)
            evicted = True

    def _eligible_f2(self, link_id: int) -> bool:
        flow = self.links[link_id].flow_id
        return self.world.links_of(flow)[1].id in self.done

    def _peak_rate(self, link_id: int) -> float:
        """Largest interference-free rate of ``link_id`` over the frame's epochs."""
        r = self._peak.get(link_id)
        if r is None:
            last = self.world.epoch_of(self.M - 1)
            r = max(self.world.standalone_rate(link_id, e) for e in range(last + 1))
            self._peak[link_id] = r
        return r

    def _balance_deficit(self, cand: int, slot: int) -> float:
        """How far the BS-band volume sent so far falls short of covering every
        UAV-band bit already committed, plus ``cand``'s, with a one-slot overshoot each.

        Admitting only at a deficit <= 0 keeps cumulative BS-band volume at or
        above cumulative UAV-band volume for the rest of the frame.
        """
        bs = uav = 0.0
        for i in self.touched:
            v = self.delivered_at(i, slot)
            if self.links[i].band is Band.F1:
                bs += v
            else:
                uav += v
        for k in [a for a in self.active if self.links[a].band is Band.F2] + [cand]:
            uav += self.residual(k, slot) + self._peak_rate(k) * self.dt
        return uav - bs

    def _balance_offset(self, cand: int, slot: int) -> float:
        deficit = self._balance_deficit(cand, slot)
        bs_rate = math.fsum(r for i, (_, r, _) in self.active.items() if self.links[i].band is Band.F1)
        if bs_rate <= 0:
            return math.inf
        return max(1, math.ceil(deficit / (bs_rate * self.dt)))

    def _admission_pass(self, slot: int) -> Tuple[bool, List[int], List[int]]:
        admitted = False
        qos_blocked: List[int] = []
        balance_blocked: List[int] = []
        res_cache: Dict[int, float] = {}

        def residuals() -> Mapping[int, float]:
            return _LazyResidual(self, slot, res_cache)

        n_bs = self._count(Band.F1)
        for i in self.sf1:
            if n_bs >= self.cfg.bs_antennas:
                break
            if i in self.active or i in self.done:
                continue
            if self.gate is not None and not self.gate.allows(i):
                continue
            v = check_contention(self.links[i], self.active, self.world, slot, residuals())
            if v.compatible:
                self._activate(i, slot)
                n_bs += 1
                admitted = True
                if self.links[i].role is LinkRole.BS_TO_UAV:
                    l2p = self.world.links_of(self.links[i].flow_id)[2].id
                    if l2p not in self.sf2:
                        self.sf2.append(l2p)
                        self._sf2_dirty = True
            elif v.reason is Reason.QOS_CONFLICT:
                qos_blocked.append(i)

        if not self._alpha() and self.sf2:
            if self._sf2_dirty:
                self.sf2 = self._sorted(self.sf2, self.world.epoch_of(slot))
                self._rerank()
                self._sf2_dirty = False
            n_uav = self._count(Band.F2)
            for i in self.sf2:
                if n_uav >= self.cfg.uav_antennas:
                    break
                if i in self.active or i in self.done or not self._eligible_f2(i):
                    continue
                if self._balance_deficit(i, slot) > 0:
                    balance_blocked.append(i)
                    continue
                v = check_contention(self.links[i], self.active, self.world, slot, residuals())
                if v.compatible:
                    self._activate(i, slot)
                    n_uav += 1
                    admitted = True
                elif v.reason is Reason.QOS_CONFLICT:
                    qos_blocked.append(i)
        return admitted, qos_blocked, balance_blocked

    def _activate(self, link_id: int, slot: int) -> None:
        self.touched.add(link_id)
        # rate is filled in when the slot's active set is priced
        self.active[link_id] = (self.delivered.get(link_id, 0.0), 0.0, slot)

    def _completion_offset(self, link_id: int, slot: int) -> float:
        """Slots from ``slot`` until ``link_id`` has delivered everything (>= 1)."""
        base, rate, start = self.active[link_id]
        demand = self.links[link_id].demand
        if rate <= 0:
            return math.inf
        n = max(1, math.ceil((demand - base) / (rate * self.dt)) - (slot - start))
        while n > 1 and demand - (base + rate * self.dt * (slot - start + n - 1)) <= 0:
            n -= 1
        while demand - (base + rate * self.dt * (slot - start + n)) > 0:
            n += 1
        return n

    def _flip_offset(self, cand: int, slot: int, epoch: int) -> float:
        """Earliest offset at which a QoS-blocked candidate could pass again."""
        link = self.links[cand]
        co_band = frozenset(a for a in self.active if self.links[a].band is link.band)
        joint = co_band | {cand}
        new = self.world.band_rates(joint, epoch)
        old = self.world.band_rates(co_band, epoch) if co_band else {}
        remaining = self.M - slot
        dt = self.dt
        need = 1
        for k in co_band:
            res = self.residual(k, slot)
            if new[k] * remaining * dt < res <= old[k] * remaining * dt:
                gap = old[k] - new[k]
                if gap <= 0:
                    return math.inf
                need = max(need, math.ceil((res - new[k] * remaining * dt) / (dt * gap)))
        # the candidate's own deadline only tightens with time
        own = self.residual(cand, slot)
        if new[cand] * (remaining - need) * dt < own:
            return math.inf
        return need

    def run(self) -> None:
        M = self.M
        slot = 0
        while slot < M:
            epoch = self.world.epoch_of(slot)
            if self.gate is not None:
                self.gate.update(self, slot)
            evicted = self._evict_insecure(slot, epoch)
            admitted, qos_blocked, balance_blocked = self._admission_pass(slot)

            rates = self.world.rates(self.active, epoch)
            key = (frozenset(self.active), epoch)
            if key != self._seg_key:
                self._restart_segments(slot, rates)
                self._seg_key = key

            if not self.cfg.fast or admitted or evicted:
                nxt = slot + 1
            else:
                nxt = min(M, self.world.next_refresh(slot))
                for i in self.active:
                    nxt = min(nxt, slot + self._completion_offset(i, slot))
                for c in qos_blocked:
                    off = self._flip_offset(c, slot, epoch)
                    if off < math.inf:
                        nxt = min(nxt, slot + max(1, off - 1))
                for c in balance_blocked:
                    off = self._balance_offset(c, slot)
                    if off < math.inf:
                        nxt = min(nxt, slot + max(1, off - 1))
                if self.gate is not None:
                    nxt = min(nxt, self.gate.next_event(self, slot))
                nxt = max(nxt, slot + 1)
            nxt = int(nxt)

            if self.active:
                self._record(slot, nxt, epoch, rates)
            for i in sorted(self.active):
                if self.residual(i, nxt) <= 0:
                    self._complete(i, nxt)
            slot = nxt

        for i in list(self.active):
            self._deactivate(i, M)

    def _record(self, start: int, stop: int, epoch: int, rates: Mapping[int, float]) -> None:
        items = tuple(sorted((i, rates[i]) for i in self.active))
        if self.segments:
            last = self.segments[-1]
            if last.stop == start and last.epoch == epoch and last.rates == items:
                self.segments[-1] = Segment(last.start, stop, epoch, items)
                return
        self.segments.append(Segment(start, stop, epoch, items))

    def _complete(self, link_id: int, slot: int) -> None:
        self._deactivate(link_id, slot)
        self.done.add(link_id)
        link = self.links[link_id]
        if link.role is not LinkRole.BS_TO_UAV:
            self.completed_flows.add(link.flow_id)


class _LazyResidual(Mapping):
    """Residual-demand view computed on first access."""

    def __init__(self, engine: _Engine, slot: int, cache: Dict[int, float]):
        self.engine, self.slot, self.cache = engine, slot, cache

    def __getitem__(self, link_id: int) -> float:
        v = self.cache.get(link_id)
        if v is None:
            v = self.engine.residual(link_id, self.slot)
            self.cache[link_id] = v
        return v

    def __iter__(self):
        return iter(self.engine.links)

    def __len__(self) -> int:
        return len(self.engine.links)


class Gate:
    """Hook restricting which BS-band links may be admitted (used by MQIS)."""

    def allows(self, link_id: int) -> bool:  # pragma: no cover - interface
        return True

    def update(self, engine: _Engine, slot: int) -> None:  # pragma: no cover - interface
        pass

    def next_event(self, engine: _Engine, slot: int) -> float:  # pragma: no cover - interface
        return math.inf


def _metrics(world: World, engine: _Engine, delivering: Mapping[int, Optional[int]], completed: Mapping[int, bool]):
    frame = world.frame
    last = max((s.stop for s in engine.segments), default=0)
    through = {
        f: (engine.delivered.get(l, 0.0) / frame.duration if l is not None else 0.0) for f, l in delivering.items()
    }
    total = math.fsum(through.values())
    strict = math.fsum(v for f, v in through.items() if completed[f])
    return Metrics(sum(completed.values()), total, last), strict


def run_engine(
    scheme: str,
    world: World,
    decisions: DecisionSets,
    config: SchedulerConfig,
    gate: Optional[Gate] = None,
    flow_ids: Optional[Iterable[int]] = None,
) -> ScheduleResult:
    f1 = [world.links_of(f)[0].id for f in decisions.s1] + [world.links_of(f)[1].id for f in decisions.s2]
    engine = _Engine(world, config, f1, decisions.s2, gate)
    engine.run()

    flows = sorted(flow_ids) if flow_ids is not None else sorted(world.flows)
    delivering: Dict[int, Optional[int]] = {}
    used: Dict[int, Tuple[int, ...]] = {}
    s1, s2 = set(decisions.s1), set(decisions.s2)
    for f in flows:
        l1, l2, l2p = world.links_of(f)
        if f in s1:
            delivering[f], used[f] = l1.id, (l1.id,)
        elif f in s2:
            delivering[f], used[f] = l2p.id, (l2.id, l2p.id)
        else:
            delivering[f], used[f] = None, ()
    completed = {f: f in engine.completed_flows for f in flows}
    metrics, strict = _metrics(world, engine, delivering, completed)
    return ScheduleResult(
        scheme=scheme,
        frame=world.frame,
        config=config,
        segments=engine.segments,
        per_flow_completed=completed,
        delivering_link=delivering,
        flow_links=used,
        metrics=metrics,
        completed_only_throughput=strict,
    )


def schedule_frame(
    decisions: DecisionSets, world: World, config: SchedulerConfig = SchedulerConfig()
) -> ScheduleResult:
    """Schedule the direct and relayed flows of ``decisions`` over one frame."""
    return run_engine("uav_assisted", world, decisions, config)


# --- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    constraint: str  # "half_duplex", "receiver", "qos", "antennas", "relay_balance", "secrecy", "record"
    slot: Optional[int]
    detail: str

    def __str__(self) -> str:
        where = f"slot {self.slot}" if self.slot is not None else "frame"
        return f"[{self.constraint}] {where}: {self.detail}"


def validate_schedule(result: ScheduleResult, world: World, rel_tol: float = 1e-9) -> List[Violation]:
    """Check a schedule against every scheduling constraint.

    Rates are recomputed from geometry with the uncached channel functions, so
    this does not trust the scheduler's own bookkeeping.
    """
    frame = result.frame
    cfg = result.config
    links = world.links
    channel = world.channel
    dt = frame.slot_duration
    out: List[Violation] = []
    delivered: Dict[int, float] = {}
    bs_cum = uav_cum = 0.0
    prev_stop = 0
    period = world.scenario.mobility.update_period
    cache: Dict[Tuple[int, FrozenSet[int]], Tuple[Dict[int, float], Dict[int, bool]]] = {}

    for seg in result.segments:
        t = seg.start
        if seg.start < prev_stop or seg.stop > frame.slot_count or seg.stop <= seg.start:
            out.append(Violation("record", t, f"bad segment bounds [{seg.start}, {seg.stop})"))
        if seg.start // period != seg.epoch or (seg.stop - 1) // period != seg.epoch:
            out.append(Violation("record", t, "segment crosses a position refresh"))
        prev_stop = seg.stop
        members = [links[i] for i in sorted(seg.link_ids)]

        n_bs = sum(1 for m in members if m.band is Band.F1)
        n_uav = len(members) - n_bs
        if n_bs > cfg.bs_antennas or n_uav > cfg.uav_antennas:
            out.append(Violation("antennas", t, f"{n_bs} BS / {n_uav} UAV links active"))
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                x, y = members[a], members[b]
                if x.transmitter == y.receiver or x.receiver == y.transmitter:
                    out.append(Violation("half_duplex", t, f"links {x.id} and {y.id}"))
                if x.receiver == y.receiver:
                    out.append(Violation("receiver", t, f"links {x.id} and {y.id} share {x.receiver}"))

        key = (seg.epoch, seg.link_ids)
        if key not in cache:
            pos = world.positions(seg.epoch)
            rates = {m.id: link_rate(m, members, pos, channel, world.shadow) for m in members}
            secure = {}
            for m in members:
                if m.band is Band.F1:
                    ce = eavesdropper_rate(m, members, pos, channel, world.shadow)
                    secure[m.id] = secrecy_ok(rates[m.id], ce)
            cache[key] = (rates, secure)
        rates, secure = cache[key]

        for i, ok in secure.items():
            if not ok:
                out.append(Violation("secrecy", t, f"BS link {i} leaks to the eavesdropper"))
        for i, r in seg.rates:
            if not math.isclose(r, rates[i], rel_tol=rel_tol):
                out.append(Violation("record", t, f"link {i} recorded rate {r} != recomputed {rates[i]}"))

        bs_rate = math.fsum(rates[m.id] for m in members if m.band is Band.F1)
        uav_rate = math.fsum(rates[m.id] for m in members if m.band is Band.F2)
        # cumulative sums are linear inside a segment: checking both ends suffices
        first_bs, first_uav = bs_cum + bs_rate * dt, uav_cum + uav_rate * dt
        bs_cum += bs_rate * dt * seg.length
        uav_cum += uav_rate * dt * seg.length
        for tau, b, u in ((t, first_bs, first_uav), (seg.stop - 1, bs_cum, uav_cum)):
            if b < u * (1 - rel_tol):
                out.append(Violation("relay_balance", tau, f"BS volume {b:.6g} < UAV volume {u:.6g}"))
                break
        for m in members:
            delivered[m.id] = delivered.get(m.id, 0.0) + rates[m.id] * dt * seg.length

    for f, done in result.per_flow_completed.items():
        if not done:
            continue
        q = world.flows[f].qos
        for lid in result.flow_links[f]:
            q_a = delivered.get(lid, 0.0) / frame.duration
            if q_a < q * (1 - rel_tol):
                out.append(Violation("qos", None, f"flow {f} link {lid}: {q_a:.6g} < {q:.6g} bit/s"))
    return out
