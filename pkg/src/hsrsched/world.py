"""A scenario bound to channel and frame parameters, with per-epoch caches.

Train nodes only move at position-refresh boundaries, so every channel
quantity is constant inside an epoch and can be memoised. The cached values
come from the pure functions in :mod:`hsrsched.channel`.
"""

from __future__ import annotations

import math
from typing import Dict, FrozenSet, Iterable, List, Tuple

from .channel import (
    Band,
    ChannelParams,
    FrameConfig,
    Link,
    LinkRole,
    ShadowField,
    db_to_linear,
    eavesdropper_power,
    interference_power,
    secrecy_ok,
    signal_power,
)
from .scenario import BS, UAV, Flow, NodeId, Position3D, Scenario


def links_for_flow(flow: Flow, frame: FrameConfig) -> Tuple[Link, Link, Link]:
    """The direct link and the two relay hops a flow may use, with stable ids."""
    v = frame.demand_volume(flow.qos)
    base = 3 * flow.id
    return (
        Link(base, flow.id, BS, flow.destination, Band.F1, LinkRole.DIRECT, v),
        Link(base + 1, flow.id, BS, UAV, Band.F1, LinkRole.BS_TO_UAV, v),
        Link(base + 2, flow.id, UAV, flow.destination, Band.F2, LinkRole.UAV_TO_MR, v),
    )


class _Epoch:
    __slots__ = ("positions", "signal", "interference", "eve", "rates", "secure")

    def __init__(self, positions: Dict[NodeId, Position3D]):
        self.positions = positions
        self.signal: Dict[int, float] = {}
        self.interference: Dict[Tuple[int, int], float] = {}
        self.eve: Dict[int, float] = {}
        self.rates: Dict[FrozenSet[int], Dict[int, float]] = {}
        self.secure: Dict[FrozenSet[int], bool] = {}


class World:
    """Everything a scheduler needs to price a set of concurrent links."""

    def __init__(self, scenario: Scenario, channel: ChannelParams, frame: FrameConfig):
        self.scenario = scenario
        self.channel = channel
        self.frame = frame
        pl = channel.path_loss
        self.shadow = ShadowField(scenario.rng_seed, pl.shadowing_sigma, pl.shadowing_enabled)
        self.links: Dict[int, Link] = {}
        for f in scenario.flows:
            for link in links_for_flow(f, frame):
                self.links[link.id] = link
        self.flows: Dict[int, Flow] = {f.id: f for f in scenario.flows}
        self._noise = {b: db_to_linear(r.noise_dbm) for b, r in channel.radios.items()}
        self._epochs: Dict[int, _Epoch] = {}

    def links_of(self, flow_id: int) -> Tuple[Link, Link, Link]:
        b = 3 * flow_id
        return self.links[b], self.links[b + 1], self.links[b + 2]

    def epoch_of(self, slot: int) -> int:
        return self.scenario.epoch(slot)

    def next_refresh(self, slot: int) -> int:
        period = self.scenario.mobility.update_period
        return (slot // period + 1) * period

    def _epoch(self, epoch: int) -> _Epoch:
        e = self._epochs.get(epoch)
        if e is None:
            slot = epoch * self.scenario.mobility.update_period
            e = _Epoch(self.scenario.positions_at_slot(slot, self.frame.slot_duration))
            self._epochs[epoch] = e
        return e

    def positions(self, epoch: int = 0) -> Dict[NodeId, Position3D]:
        return self._epoch(epoch).positions

    def _signal_mw(self, e: _Epoch, link: Link) -> float:
        v = e.signal.get(link.id)
        if v is None:
            v = db_to_linear(signal_power(link, e.positions, self.channel, self.shadow))
            e.signal[link.id] = v
        return v

    def _interference_mw(self, e: _Epoch, j: Link, i: Link) -> float:
        key = (j.id, i.id)
        v = e.interference.get(key)
        if v is None:
            v = db_to_linear(interference_power(j, i, e.positions, self.channel, self.shadow))
            e.interference[key] = v
        return v

    def _eve_mw(self, e: _Epoch, link: Link) -> float:
        v = e.eve.get(link.id)
        if v is None:
            v = db_to_linear(eavesdropper_power(link, e.positions, self.channel, self.shadow))
            e.eve[link.id] = v
        return v

    def _shannon(self, band: Band, s: float, n_plus_i: float) -> float:
        radio = self.channel.radios[band]
        return radio.efficiency * radio.bandwidth_hz * math.log2(1.0 + s / n_plus_i)

    def band_rates(self, ids: FrozenSet[int], epoch: int) -> Dict[int, float]:
        """Rates of the links ``ids`` (all on one band) transmitting together."""
        e = self._epoch(epoch)
        r = e.rates.get(ids)
        if r is None:
            members = [self.links[i] for i in sorted(ids)]
            r = {}
            for link in members:
                n_i = self._noise[link.band]
                for j in members:
                    if j.id != link.id:
                        n_i += self._interference_mw(e, j, link)
                r[link.id] = self._shannon(link.band, self._signal_mw(e, link), n_i)
            e.rates[ids] = r
        return r

    def rates(self, ids: Iterable[int], epoch: int) -> Dict[int, float]:
        """Rates of an arbitrary active set; the two bands never interfere."""
        f1, f2 = self.split_bands(ids)
        out = dict(self.band_rates(f1, epoch)) if f1 else {}
        if f2:
            out.update(self.band_rates(f2, epoch))
        return out

    def split_bands(self, ids: Iterable[int]) -> Tuple[FrozenSet[int], FrozenSet[int]]:
        f1, f2 = [], []
        for i in ids:
            (f1 if self.links[i].band is Band.F1 else f2).append(i)
        return frozenset(f1), frozenset(f2)

    def standalone_rate(self, link_id: int, epoch: int = 0) -> float:
        return self.band_rates(frozenset((link_id,)), epoch)[link_id]

    def eavesdropper_rates(self, f1_ids: FrozenSet[int], epoch: int) -> Dict[int, float]:
        e = self._epoch(epoch)
        members = [self.links[i] for i in sorted(f1_ids)]
        powers = {m.id: self._eve_mw(e, m) for m in members}
        noise = self._noise[Band.F1]
        out = {}
        for i, p in powers.items():
            n_i = noise
            for j, q in powers.items():
                if j != i:
                    n_i += q
            out[i] = self._shannon(Band.F1, p, n_i)
        return out

    def all_secure(self, f1_ids: FrozenSet[int], epoch: int) -> bool:
        """True iff every BS-band link in ``f1_ids`` meets the secrecy ratio together."""
        if not f1_ids:
            return True
        e = self._epoch(epoch)
        v = e.secure.get(f1_ids)
        if v is None:
            main = self.band_rates(f1_ids, epoch)
            eve = self.eavesdropper_rates(f1_ids, epoch)
            v = all(secrecy_ok(main[i], eve[i]) for i in f1_ids)
            e.secure[f1_ids] = v
        return v

    def standalone_secure(self, link_id: int, epoch: int = 0) -> bool:
        return self.all_secure(frozenset((link_id,)), epoch)

    def insecure_links(self, f1_ids: FrozenSet[int], epoch: int) -> List[int]:
        main = self.band_rates(f1_ids, epoch)
        eve = self.eavesdropper_rates(f1_ids, epoch)
        return sorted(i for i in f1_ids if not secrecy_ok(main[i], eve[i]))
