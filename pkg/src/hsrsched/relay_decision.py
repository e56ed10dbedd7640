"""Per-flow choice between direct BS delivery and relaying through the UAV."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .channel import FrameConfig
from .scenario import Flow
from .world import World


class Verdict(enum.Enum):
    DIRECT = "direct"
    RELAYED = "relayed"
    ABANDONED = "abandoned"


class Path(enum.Enum):
    DIRECT = "direct"
    VIA_UAV = "via_uav"


@dataclass(frozen=True)
class Estimates:
    q_l1: float  # standalone frame throughput of BS -> MR
    q_l2: float  # BS -> UAV
    q_l2p: float  # UAV -> MR
    r_l1: float  # interference-free rates behind the above
    r_l2: float
    r_l2p: float
    direct_secure: bool


@dataclass(frozen=True)
class FlowDecision:
    flow_id: int
    verdict: Verdict
    estimates: Estimates
    estimated_slots: float  # for the chosen path; inf when abandoned


@dataclass
class DecisionSets:
    s1: List[int] = field(default_factory=list)
    s2: List[int] = field(default_factory=list)
    abandoned: List[int] = field(default_factory=list)
    decisions: Dict[int, FlowDecision] = field(default_factory=dict)

    def verdict(self, flow_id: int) -> Verdict:
        return self.decisions[flow_id].verdict


def standalone_throughput(rate: float, frame: FrameConfig) -> float:
    """Frame throughput of a link that has every slot to itself at ``rate``."""
    return rate * frame.slot_count * frame.slot_duration / frame.duration


def estimate_standalone_throughput(flow: Flow, path: Path, world: World):
    """``q_l1`` for the direct path, ``(q_l2, q_l2p)`` for the relayed one."""
    l1, l2, l2p = world.links_of(flow.id)
    frame = world.frame
    if path is Path.DIRECT:
        return standalone_throughput(world.standalone_rate(l1.id), frame)
    return (
        standalone_throughput(world.standalone_rate(l2.id), frame),
        standalone_throughput(world.standalone_rate(l2p.id), frame),
    )


def _slots(volume: float, rate: float, slot_duration: float) -> float:
    if rate <= 0:
        return math.inf
    n = math.ceil(volume / (rate * slot_duration))
    # ceil of a quotient can land one off; settle on the smallest n that delivers
    while n > 0 and (n - 1) * rate * slot_duration >= volume:
        n -= 1
    while n * rate * slot_duration < volume:
        n += 1
    return n


def estimate_slots(flow: Flow, verdict: Verdict, rates: Tuple[float, ...], frame: FrameConfig) -> float:
    """Slots needed to move one frame's worth of the flow's demand.

    ``rates`` is ``(r_l1,)`` for a direct verdict and ``(r_l2, r_l2p)`` for a
    relayed one. Each hop carries the full demand volume.
    """
    volume = frame.demand_volume(flow.qos)
    if verdict is Verdict.DIRECT:
        return _slots(volume, rates[0], frame.slot_duration)
    if verdict is Verdict.RELAYED:
        return sum(_slots(volume, r, frame.slot_duration) for r in rates)
    raise ValueError("abandoned flows have no slot estimate")


def _estimates(flow: Flow, world: World) -> Estimates:
    l1, l2, l2p = world.links_of(flow.id)
    r1, r2, r2p = (world.standalone_rate(x.id) for x in (l1, l2, l2p))
    frame = world.frame
    return Estimates(
        q_l1=standalone_throughput(r1, frame),
        q_l2=standalone_throughput(r2, frame),
        q_l2p=standalone_throughput(r2p, frame),
        r_l1=r1,
        r_l2=r2,
        r_l2p=r2p,
        direct_secure=world.standalone_secure(l1.id),
    )


def decide_flow(flow: Flow, world: World, est: Optional[Estimates] = None) -> FlowDecision:
    est = est or _estimates(flow, world)
    frame = world.frame
    q = flow.qos
    direct_ok = est.q_l1 >= q
    relay_ok = min(est.q_l2, est.q_l2p) >= q
    te_direct = estimate_slots(flow, Verdict.DIRECT, (est.r_l1,), frame)
    te_relay = estimate_slots(flow, Verdict.RELAYED, (est.r_l2, est.r_l2p), frame)

    if not direct_ok and not relay_ok:
        verdict = Verdict.ABANDONED
    elif relay_ok and not direct_ok:
        verdict = Verdict.RELAYED
    elif direct_ok and not relay_ok:
        verdict = Verdict.DIRECT if est.direct_secure else Verdict.ABANDONED
    elif not est.direct_secure:
        verdict = Verdict.RELAYED
    else:
        verdict = Verdict.DIRECT if te_direct <= te_relay else Verdict.RELAYED

    slots = {Verdict.DIRECT: te_direct, Verdict.RELAYED: te_relay}.get(verdict, math.inf)
    return FlowDecision(flow.id, verdict, est, slots)


def decide_all(flows: Iterable[Flow], world: World) -> DecisionSets:
    """Sort every flow into direct (s1), relayed (s2) or abandoned, by flow id."""
    out = DecisionSets()
    for flow in sorted(flows, key=lambda f: f.id):
        d = decide_flow(flow, world)
        out.decisions[flow.id] = d
        {Verdict.DIRECT: out.s1, Verdict.RELAYED: out.s2, Verdict.ABANDONED: out.abandoned}[d.verdict].append(
            flow.id
        )
    return out


def direct_only(flows: Iterable[Flow], world: World) -> DecisionSets:
    """Decision sets for schemes without a relay: direct if feasible and secure, else abandoned."""
    out = DecisionSets()
    for flow in sorted(flows, key=lambda f: f.id):
        est = _estimates(flow, world)
        ok = est.q_l1 >= flow.qos and est.direct_secure
        verdict = Verdict.DIRECT if ok else Verdict.ABANDONED
        slots = estimate_slots(flow, Verdict.DIRECT, (est.r_l1,), world.frame) if ok else math.inf
        out.decisions[flow.id] = FlowDecision(flow.id, verdict, est, slots)
        (out.s1 if ok else out.abandoned).append(flow.id)
    return out
