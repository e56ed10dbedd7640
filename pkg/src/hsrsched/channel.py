"""Physical-layer models: antenna pattern, path loss, SINR rate, secrecy.

All powers are in dBm and gains in dB unless a name says ``_mw`` (linear
milliwatts). Rates are in bit/s. Every function here is pure.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, Mapping, Optional, Sequence

from .errors import ConfigurationError
from .scenario import EVE, NodeId, NodeKind, Position3D, distance, rng_stream, STREAM_SHADOWING

Positions = Mapping[NodeId, Position3D]
ShadowFn = Callable[[NodeId, NodeId], float]


class Band(enum.Enum):
    F1 = "f1"  # BS transmissions
    F2 = "f2"  # UAV transmissions


class LinkRole(enum.Enum):
    DIRECT = "direct"  # BS -> MR
    BS_TO_UAV = "bs_to_uav"
    UAV_TO_MR = "uav_to_mr"


def db_to_linear(x: float) -> float:
    return 10.0 ** (x / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class AntennaParams:
    max_gain: float = 20.0  # dBi
    half_power_beamwidth: float = 15.0  # deg
    side_lobe_gain: Optional[float] = None  # dBi; None -> derived from the beamwidth
    max_attenuation: float = 26.0  # dB, only used when clamp_main_lobe is set
    clamp_main_lobe: bool = False

    def __post_init__(self):
        if not 0 < self.half_power_beamwidth < 180:
            raise ConfigurationError("antenna.half_power_beamwidth must be in (0, 180)")
        if self.side_lobe_gain is None:
            # natural log; gives about -11.7 dBi at 15 deg
            object.__setattr__(
                self, "side_lobe_gain", -0.4111 * math.log(self.half_power_beamwidth) - 10.579
            )
        if not self.side_lobe_gain < self.max_gain:
            raise ConfigurationError("antenna.side_lobe_gain must be below max_gain")

    @property
    def main_lobe_width(self) -> float:
        return 2.6 * self.half_power_beamwidth


@dataclass(frozen=True)
class PathLossParams:
    break_distance: float = 153.3
    alpha_near: float = 108.75
    alpha_far: float = 42.34
    beta_near: float = -1.45
    beta_far: float = 1.59
    shadowing_sigma: float = 5.85
    shadowing_enabled: bool = False

    def __post_init__(self):
        if not self.break_distance > 0:
            raise ConfigurationError("path_loss.break_distance must be positive")
        if self.shadowing_sigma < 0:
            raise ConfigurationError("path_loss.shadowing_sigma must be >= 0")


@dataclass(frozen=True)
class RadioParams:
    band: Band
    carrier_frequency: float  # GHz, informational
    bandwidth: float  # MHz
    transmit_power: float  # dBm
    noise_density: float = -134.0  # dBm/MHz
    efficiency: float = 0.5

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ConfigurationError(f"radio[{self.band.value}].bandwidth must be positive")
        if not 0 < self.efficiency < 1:
            raise ConfigurationError(f"radio[{self.band.value}].efficiency must be in (0, 1)")

    @property
    def noise_dbm(self) -> float:
        return self.noise_density + 10.0 * math.log10(self.bandwidth)

    @property
    def bandwidth_hz(self) -> float:
        return self.bandwidth * 1e6


@dataclass(frozen=True)
class FrameConfig:
    slot_count: int = 8000
    slot_duration: float = 18e-6
    scheduling_phase: float = 850e-6

    def __post_init__(self):
        if self.slot_count < 1:
            raise ConfigurationError("frame.slot_count must be >= 1")
        if not self.slot_duration > 0:
            raise ConfigurationError("frame.slot_duration must be positive")
        if self.scheduling_phase < 0:
            raise ConfigurationError("frame.scheduling_phase must be >= 0")

    @property
    def duration(self) -> float:
        return self.scheduling_phase + self.slot_count * self.slot_duration

    def demand_volume(self, qos: float) -> float:
        """Bits a flow with throughput requirement ``qos`` must move in one frame."""
        return qos * self.duration


# Transmit power is not given with the other radio constants; see README.
DEFAULT_TRANSMIT_POWER = -30.0


def default_radios(transmit_power: float = DEFAULT_TRANSMIT_POWER) -> Dict[Band, RadioParams]:
    return {
        Band.F1: RadioParams(Band.F1, 28.0, 850.0, transmit_power),
        Band.F2: RadioParams(Band.F2, 60.0, 1500.0, transmit_power),
    }


PATH_CLASSES = ("bs_mr", "bs_uav", "uav_mr", "bs_eve")


def path_class(tx: NodeId, rx: NodeId) -> str:
    kinds = {tx.kind, rx.kind}
    if NodeKind.EVE in kinds:
        return "bs_eve"
    if kinds == {NodeKind.BS, NodeKind.UAV}:
        return "bs_uav"
    if NodeKind.UAV in kinds:
        return "uav_mr"
    return "bs_mr"


@dataclass(frozen=True)
class ChannelParams:
    antenna: AntennaParams = field(default_factory=AntennaParams)
    path_loss: PathLossParams = field(default_factory=PathLossParams)
    radios: Mapping[Band, RadioParams] = field(default_factory=default_radios)
    path_loss_overrides: Mapping[str, PathLossParams] = field(default_factory=dict)
    eavesdropper_directional: bool = True

    def __post_init__(self):
        unknown = set(self.path_loss_overrides) - set(PATH_CLASSES)
        if unknown:
            raise ConfigurationError(f"unknown path-loss override classes: {sorted(unknown)}")

    def path_loss_for(self, tx: NodeId, rx: NodeId) -> PathLossParams:
        return self.path_loss_overrides.get(path_class(tx, rx), self.path_loss)

    def with_transmit_power(self, dbm: float) -> "ChannelParams":
        return replace(self, radios={b: replace(r, transmit_power=dbm) for b, r in self.radios.items()})


@dataclass(frozen=True)
class Link:
    id: int
    flow_id: int
    transmitter: NodeId
    receiver: NodeId
    band: Band
    role: LinkRole
    demand: float  # bits to deliver in the frame

    def __post_init__(self):
        expected = {NodeKind.BS: Band.F1, NodeKind.UAV: Band.F2}.get(self.transmitter.kind)
        if self.band is not expected:
            raise ValueError(f"link {self.id}: band {self.band} does not match transmitter {self.transmitter}")


# --- antenna ---------------------------------------------------------------


def antenna_gain(angle: float, p: AntennaParams) -> float:
    """Gain in dBi at ``angle`` degrees off boresight."""
    if not 0.0 <= angle <= 180.0:
        raise ValueError(f"off-boresight angle {angle} outside [0, 180]")
    if angle <= p.main_lobe_width / 2:
        g = p.max_gain - 3.01 * (2.0 * angle / p.half_power_beamwidth) ** 2
        if p.clamp_main_lobe:
            g = max(g, p.max_gain - p.max_attenuation)
        return g
    return p.side_lobe_gain


def off_boresight_angle(origin: Position3D, boresight_to: Position3D, toward: Position3D) -> float:
    """Angle in degrees at ``origin`` between the beam to ``boresight_to`` and the ray to ``toward``."""
    a = boresight_to - origin
    b = toward - origin
    na = math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
    nb = math.sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2])
    if na == 0.0 or nb == 0.0:
        return 0.0
    c = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (na * nb)
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


# --- propagation -----------------------------------------------------------


def path_loss(d: float, p: PathLossParams, shadow: float = 0.0) -> float:
    if not d > 0:
        raise ValueError(f"path-loss distance must be positive, got {d}")
    if d <= p.break_distance:
        alpha, beta = p.alpha_near, p.beta_near
    else:
        alpha, beta = p.alpha_far, p.beta_far
    return alpha + 10.0 * beta * math.log10(d) + (shadow if p.shadowing_enabled else 0.0)


def received_power(
    tx_gain: float,
    rx_gain: float,
    radio: RadioParams,
    d: float,
    p: PathLossParams,
    shadow: float = 0.0,
) -> float:
    return tx_gain + rx_gain + radio.transmit_power - path_loss(d, p, shadow)


class ShadowField:
    """Log-normal shadowing, one draw per ordered (tx, rx) node pair per frame.

    Each pair gets its own child stream of the run seed, so the draw does not
    depend on the order in which pairs are first queried.
    """

    def __init__(self, seed: int, sigma: float, enabled: bool = True):
        self.seed = seed
        self.sigma = sigma
        self.enabled = enabled and sigma > 0
        self._cache: Dict[tuple, float] = {}

    def __call__(self, tx: NodeId, rx: NodeId) -> float:
        if not self.enabled:
            return 0.0
        key = (int(tx.kind), tx.index, int(rx.kind), rx.index)
        v = self._cache.get(key)
        if v is None:
            v = float(rng_stream(self.seed, STREAM_SHADOWING, *key).normal(0.0, self.sigma))
            self._cache[key] = v
        return v


def _no_shadow(tx: NodeId, rx: NodeId) -> float:
    return 0.0


def _path_power(
    tx: NodeId,
    tx_aim: NodeId,
    rx: NodeId,
    rx_aim: NodeId,
    positions: Positions,
    params: ChannelParams,
    radio: RadioParams,
    shadow: ShadowFn,
    rx_directional: bool = True,
) -> float:
    """Power (dBm) at ``rx`` from ``tx`` when tx beams at ``tx_aim`` and rx at ``rx_aim``."""
    pt, pr = positions[tx], positions[rx]
    g_t = antenna_gain(off_boresight_angle(pt, positions[tx_aim], pr), params.antenna)
    if rx_directional:
        g_r = antenna_gain(off_boresight_angle(pr, positions[rx_aim], pt), params.antenna)
    else:
        g_r = 0.0
    return received_power(g_t, g_r, radio, distance(pt, pr), params.path_loss_for(tx, rx), shadow(tx, rx))


def signal_power(link: Link, positions: Positions, params: ChannelParams, shadow: ShadowFn = _no_shadow) -> float:
    radio = params.radios[link.band]
    t, r = link.transmitter, link.receiver
    return _path_power(t, r, r, t, positions, params, radio, shadow)


def interference_power(
    interferer: Link,
    victim: Link,
    positions: Positions,
    params: ChannelParams,
    shadow: ShadowFn = _no_shadow,
) -> float:
    """Power (dBm) that ``interferer``'s transmitter leaks into ``victim``'s receiver."""
    if interferer.band is not victim.band:
        raise ValueError("cross-band links do not interfere")
    if interferer.id == victim.id:
        raise ValueError("a link does not interfere with itself")
    radio = params.radios[interferer.band]
    return _path_power(
        interferer.transmitter,
        interferer.receiver,
        victim.receiver,
        victim.transmitter,
        positions,
        params,
        radio,
        shadow,
    )


def shannon_rate(signal_mw: float, noise_plus_interference_mw: float, radio: RadioParams) -> float:
    return radio.efficiency * radio.bandwidth_hz * math.log2(1.0 + signal_mw / noise_plus_interference_mw)


def link_rate(
    link: Link,
    active: Iterable[Link],
    positions: Positions,
    params: ChannelParams,
    shadow: ShadowFn = _no_shadow,
) -> float:
    """Rate of ``link`` with every other co-band link in ``active`` interfering."""
    radio = params.radios[link.band]
    noise = db_to_linear(radio.noise_dbm)
    interference = sum(
        db_to_linear(interference_power(j, link, positions, params, shadow))
        for j in active
        if j.band is link.band and j.id != link.id
    )
    s = db_to_linear(signal_power(link, positions, params, shadow))
    return shannon_rate(s, noise + interference, radio)


def eavesdropper_power(
    link: Link, positions: Positions, params: ChannelParams, shadow: ShadowFn = _no_shadow
) -> float:
    """Power (dBm) of BS link ``link`` at the eavesdropper, whose beam faces the BS."""
    radio = params.radios[link.band]
    return _path_power(
        link.transmitter,
        link.receiver,
        EVE,
        link.transmitter,
        positions,
        params,
        radio,
        shadow,
        rx_directional=params.eavesdropper_directional,
    )


def eavesdropper_rate(
    link: Link,
    active: Iterable[Link],
    positions: Positions,
    params: ChannelParams,
    shadow: ShadowFn = _no_shadow,
) -> float:
    """Shannon rate the eavesdropper gets on ``link``; other F1 links in ``active`` jam it."""
    if link.band is not Band.F1:
        raise ValueError("the eavesdropper only listens on the BS band")
    radio = params.radios[Band.F1]
    noise = db_to_linear(radio.noise_dbm)
    interference = sum(
        db_to_linear(eavesdropper_power(j, positions, params, shadow))
        for j in active
        if j.band is Band.F1 and j.id != link.id
    )
    s = db_to_linear(eavesdropper_power(link, positions, params, shadow))
    return shannon_rate(s, noise + interference, radio)


def achieved_throughput(per_slot_rates: Sequence[float], frame: FrameConfig) -> float:
    if len(per_slot_rates) > frame.slot_count:
        raise ValueError("more per-slot rates than slots in the frame")
    return math.fsum(per_slot_rates) * frame.slot_duration / frame.duration


def secrecy_capacity(main_rate: float, eavesdrop_rate: float) -> float:
    return main_rate - eavesdrop_rate


SECRECY_RATIO = 0.1


def secrecy_ok(main_rate: float, eavesdrop_rate: float) -> bool:
    return eavesdrop_rate < SECRECY_RATIO * main_rate


def secrecy_admissible(
    link: Link,
    active: Iterable[Link],
    positions: Positions,
    params: ChannelParams,
    shadow: ShadowFn = _no_shadow,
) -> bool:
    active = list(active)
    if link.band is not Band.F1:
        raise ValueError("secrecy is only checked on BS-band links")
    c_m = link_rate(link, active, positions, params, shadow)
    c_e = eavesdropper_rate(link, active, positions, params, shadow)
    return secrecy_ok(c_m, c_e)
