"""Physical world: node placement, train mobility and flow generation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .errors import ConfigurationError

KMH = 1.0 / 3.6

# Named child streams of the root seed. Adding a stream must append here, never
# reorder, or every stored result changes.
STREAM_SCENARIO = 0
STREAM_SHADOWING = 1
STREAM_TIE_BREAK = 2


def rng_stream(seed: int, stream: int, *key: int) -> np.random.Generator:
    """Independent generator for ``stream`` (and optional sub-key) of ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream, *key)))


class NodeKind(enum.IntEnum):
    BS = 0
    UAV = 1
    MR = 2
    EVE = 3


@dataclass(frozen=True, order=True)
class NodeId:
    kind: NodeKind
    index: int = 0

    @classmethod
    def bs(cls) -> "NodeId":
        return cls(NodeKind.BS)

    @classmethod
    def uav(cls) -> "NodeId":
        return cls(NodeKind.UAV)

    @classmethod
    def eve(cls) -> "NodeId":
        return cls(NodeKind.EVE)

    @classmethod
    def mr(cls, index: int) -> "NodeId":
        return cls(NodeKind.MR, index)

    def __str__(self) -> str:
        if self.kind is NodeKind.MR:
            return f"MR{self.index}"
        return self.kind.name


BS = NodeId.bs()
UAV = NodeId.uav()
EVE = NodeId.eve()


@dataclass(frozen=True)
class Position3D:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite coordinate in {self!r}")
        if self.z < 0:
            raise ValueError(f"negative height in {self!r}")

    def shifted(self, dx: float) -> "Position3D":
        return Position3D(self.x + dx, self.y, self.z)

    def __sub__(self, other: "Position3D") -> Tuple[float, float, float]:
        return (self.x - other.x, self.y - other.y, self.z - other.z)


def distance(a: Position3D, b: Position3D) -> float:
    return math.dist((a.x, a.y, a.z), (b.x, b.y, b.z))


@dataclass(frozen=True)
class TrainLayout:
    car_count: int = 8
    car_length: float = 25.0
    mr_per_car: int = 3
    mr_height: float = 2.5

    @property
    def mr_count(self) -> int:
        return self.car_count * self.mr_per_car

    @property
    def length(self) -> float:
        return self.car_count * self.car_length

    @property
    def spacing(self) -> float:
        return self.length / self.mr_count

    def validate(self) -> None:
        if self.car_count < 1 or self.mr_per_car < 1:
            raise ConfigurationError("layout: car_count and mr_per_car must be >= 1")
        if not self.car_length > 0:
            raise ConfigurationError("layout.car_length must be positive")
        if self.mr_height < 0:
            raise ConfigurationError("layout.mr_height must be >= 0")


@dataclass(frozen=True)
class MobilityConfig:
    speed: float = 300.0 * KMH
    update_period: int = 2000
    initial_train_offset: float = 0.0

    def validate(self) -> None:
        if self.speed < 0:
            raise ConfigurationError("mobility.speed must be >= 0")
        if self.update_period < 1:
            raise ConfigurationError("mobility.update_period must be >= 1")


@dataclass(frozen=True)
class Flow:
    id: int
    destination: NodeId
    qos: float  # required throughput q_f, bit/s

    def __post_init__(self):
        if self.destination.kind is not NodeKind.MR:
            raise ValueError("flow destination must be an MR")
        if not self.qos > 0:
            raise ValueError("flow QoS requirement must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    """Inputs for :func:`build_scenario`.

    The track runs along x at y=0. The BS sits ``bs_track_offset`` metres to the
    side of it; the UAV hovers ``uav_distance`` metres along-track from the BS,
    on the side of the train, at ``uav_height``.
    """

    flow_count: int = 18
    qos_min: float = 10e6
    qos_max: float = 500e6
    bs_height: float = 10.0
    bs_track_offset: float = 25.0
    uav_height: float = 100.0
    uav_distance: float = 150.0
    layout: TrainLayout = field(default_factory=TrainLayout)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)

    def validate(self) -> None:
        self.layout.validate()
        self.mobility.validate()
        if self.flow_count < 0:
            raise ConfigurationError("scenario.flow_count must be >= 0")
        if self.flow_count > self.layout.mr_count:
            raise ConfigurationError(
                f"scenario.flow_count={self.flow_count} exceeds MR count {self.layout.mr_count}"
            )
        if not 0 < self.qos_min <= self.qos_max:
            raise ConfigurationError("scenario.qos_min/qos_max must satisfy 0 < min <= max")
        if self.bs_height < 0 or not self.uav_height > 0:
            raise ConfigurationError("scenario heights must be positive")
        if self.uav_distance < 0:
            raise ConfigurationError("scenario.uav_distance must be >= 0")


@dataclass(frozen=True)
class Scenario:
    bs_position: Position3D
    uav_position: Position3D
    eavesdropper_attachment: float
    layout: TrainLayout
    mobility: MobilityConfig
    flows: Tuple[Flow, ...]
    rng_seed: int

    @property
    def mr_count(self) -> int:
        return self.layout.mr_count

    def initial_positions(self) -> Dict[NodeId, Position3D]:
        front = self.mobility.initial_train_offset
        h = self.layout.mr_height
        spacing = self.layout.spacing
        pos = {BS: self.bs_position, UAV: self.uav_position}
        for i in range(self.layout.mr_count):
            pos[NodeId.mr(i)] = Position3D(front - (i + 0.5) * spacing, 0.0, h)
        pos[EVE] = Position3D(front - self.eavesdropper_attachment, 0.0, h)
        return pos

    def epoch(self, slot: int) -> int:
        return slot // self.mobility.update_period

    def positions_at_slot(self, slot: int, slot_duration: float = 18e-6) -> Dict[NodeId, Position3D]:
        return positions_at_slot(self, slot, slot_duration)


def positions_at_slot(s: Scenario, slot: int, slot_duration: float = 18e-6) -> Dict[NodeId, Position3D]:
    """Node positions at ``slot``; train nodes move only at refresh boundaries."""
    if slot < 0:
        raise ValueError("slot must be >= 0")
    period = s.mobility.update_period
    dx = s.mobility.speed * (slot // period) * period * slot_duration
    pos = s.initial_positions()
    if dx:
        for node, p in pos.items():
            if node.kind in (NodeKind.MR, NodeKind.EVE):
                pos[node] = p.shifted(dx)
    return pos


def build_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    config.validate()
    rng = rng_stream(seed, STREAM_SCENARIO)
    mr_count = config.layout.mr_count
    destinations = rng.choice(mr_count, size=config.flow_count, replace=False)
    qos = rng.uniform(config.qos_min, config.qos_max, size=config.flow_count)
    # own sub-stream, so the eavesdropper stays put when only the flow count changes
    attachment = float(rng_stream(seed, STREAM_SCENARIO, 1).uniform(0.0, config.layout.length))

    flows = tuple(
        Flow(i, NodeId.mr(int(d)), float(q)) for i, (d, q) in enumerate(zip(destinations, qos))
    )
    bs = Position3D(0.0, config.bs_track_offset, config.bs_height)
    # The train trails the BS (front starts at the BS x), so the UAV is put on that side.
    uav = Position3D(bs.x - config.uav_distance, bs.y, config.uav_height)
    return Scenario(
        bs_position=bs,
        uav_position=uav,
        eavesdropper_attachment=attachment,
        layout=config.layout,
        mobility=config.mobility,
        flows=flows,
        rng_seed=seed,
    )
