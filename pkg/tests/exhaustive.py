"""Exhaustive optimum for tiny instances, used as an oracle for the heuristic.

Only valid with one antenna per band and a frame shorter than the position
refresh period: then no two co-band links ever overlap, every link runs at
its interference-free rate, and a schedule is fully described by how many
slots each link gets plus the order in which it gets them.

The search fixes a path for each flow (skip, direct, relay) and asks whether
some slot-by-slot activation completes every chosen flow. Besides needed
links, any secure BS-band link may be switched on as filler, since extra
BS-side volume can only relax the relay-balance prefix condition.
"""

from __future__ import annotations

import itertools
import math
from typing import Dict, List, Optional, Tuple

from hsrsched.channel import Band
from hsrsched.world import World


def slots_needed(volume: float, rate: float, dt: float) -> float:
    """Minimal n with n * rate * dt >= volume (inf for a dead link)."""
    if rate <= 0:
        return math.inf
    n = max(0, int(volume // (rate * dt)) - 1)
    while n * rate * dt < volume:
        n += 1
    return n


class _Search:
    def __init__(self, world: World):
        frame = world.frame
        if frame.slot_count > world.scenario.mobility.update_period:
            raise ValueError("oracle assumes a single mobility epoch")
        self.M = frame.slot_count
        self.dt = frame.slot_duration
        self.links = world.links
        self.rate = {i: world.standalone_rate(i, 0) for i in world.links}
        self.secure = {i: world.standalone_secure(i, 0) for i, l in world.links.items() if l.band is Band.F1}
        self.need = {
            i: slots_needed(l.demand, self.rate[i], self.dt) for i, l in world.links.items()
        }
        self.filler = [i for i, ok in sorted(self.secure.items()) if ok and self.rate[i] > 0]

    def feasible(self, needed: List[int]) -> bool:
        for i in needed:
            if self.need[i] > self.M:
                return False
            if self.links[i].band is Band.F1 and not self.secure[i]:
                return False
        f1 = [i for i in needed if self.links[i].band is Band.F1]
        f2 = [i for i in needed if self.links[i].band is Band.F2]
        if sum(self.need[i] for i in f1) > self.M or sum(self.need[i] for i in f2) > self.M:
            return False
        order = f1 + f2
        pos = {i: k for k, i in enumerate(order)}
        start = tuple(int(self.need[i]) for i in order)
        failed: Dict[Tuple[int, Tuple[int, ...]], float] = {}
        f1_options: List[Optional[int]] = list(dict.fromkeys(f1 + self.filler))
        dt = self.dt

        def dfs(t: int, rem: Tuple[int, ...], surplus: float) -> bool:
            if not any(rem):
                return True
            left = self.M - t
            if left == 0:
                return False
            if sum(rem[pos[i]] for i in f1) > left or sum(rem[pos[i]] for i in f2) > left:
                return False
            key = (t, rem)
            if surplus <= failed.get(key, -math.inf):
                return False
            for a in [None] + f1_options:
                for b in [None] + [i for i in f2 if rem[pos[i]] > 0]:
                    if a is None and b is None:
                        continue
                    la = self.links[a] if a is not None else None
                    lb = self.links[b] if b is not None else None
                    if la is not None and lb is not None:
                        if la.receiver == lb.transmitter or la.receiver == lb.receiver:
                            continue
                    nxt = list(rem)
                    gain = 0.0
                    if a is not None:
                        gain += self.rate[a] * dt
                        if a in pos and nxt[pos[a]] > 0:
                            nxt[pos[a]] -= 1
                    if b is not None:
                        gain -= self.rate[b] * dt
                        nxt[pos[b]] -= 1
                    ns = surplus + gain
                    if ns < -1e-6:
                        continue
                    if dfs(t + 1, tuple(nxt), ns):
                        return True
            failed[key] = max(failed.get(key, -math.inf), surplus)
            return False

        return dfs(0, start, 0.0)


def optimal_completed(world: World) -> int:
    """Largest number of flows any valid schedule can complete in the frame."""
    s = _Search(world)
    flows = sorted(world.flows)
    plans = sorted(
        itertools.product(("skip", "direct", "relay"), repeat=len(flows)),
        key=lambda p: -sum(x != "skip" for x in p),
    )
    for plan in plans:
        needed: List[int] = []
        for f, how in zip(flows, plan):
            l1, l2, l2p = world.links_of(f)
            if how == "direct":
                needed.append(l1.id)
            elif how == "relay":
                needed += [l2.id, l2p.id]
        if s.feasible(needed):
            return sum(x != "skip" for x in plan)
    return 0
