"""Experiment configuration: YAML in, frozen dataclasses out, and back.

Every key is optional; omitted keys keep the defaults of the underlying
dataclasses. Units that would make YAML awkward are spelled out in the key
name (``qos_min_mbps``, ``slot_duration_us``, ``speed_kmh``).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import re

import yaml

from ..channel import AntennaParams, Band, ChannelParams, FrameConfig, PathLossParams, RadioParams, default_radios
from ..errors import ConfigurationError
from ..scenario import KMH, MobilityConfig, ScenarioConfig, TrainLayout
from ..scheduler import SchedulerConfig

SWEEP_VARIABLES = ("flow_count", "slot_count", "uav_distance")
SCHEMES = ("uav_assisted", "qos_concurrent", "mqis")
DEFAULT_SEEDS = tuple(range(20))


def _canonical(name: str, choices: Tuple[str, ...], what: str) -> str:
    """Accept ``flow_count``, ``FlowCount``, ``flow-count`` and the like."""
    key = str(name).replace("_", "").replace("-", "").lower()
    for c in choices:
        if c.replace("_", "") == key:
            return c
    raise ConfigurationError(f"unknown {what} {name!r}; expected one of {', '.join(choices)}")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "variable", _canonical(self.variable, SWEEP_VARIABLES, "sweep variable"))
        if not self.values:
            raise ConfigurationError("sweep.values must be nonempty")
        vals = []
        for v in self.values:
            if not v > 0:
                raise ConfigurationError(f"sweep.values must be positive, got {v!r}")
            if self.variable != "uav_distance":
                if float(v) != int(v):
                    raise ConfigurationError(f"sweep.values for {self.variable} must be integers, got {v!r}")
                v = int(v)
            else:
                v = float(v)
            vals.append(v)
        object.__setattr__(self, "values", tuple(vals))


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    channel: ChannelParams = field(default_factory=ChannelParams)
    frame: FrameConfig = field(default_factory=FrameConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    sweep: Optional[SweepSpec] = None  # None: one point at the scenario/frame values
    schemes: Tuple[str, ...] = SCHEMES
    seeds: Tuple[int, ...] = DEFAULT_SEEDS
    completed_only: bool = False  # count only completed flows in system throughput
    output: str = "results"

    def __post_init__(self):
        if not self.schemes:
            raise ConfigurationError("schemes must be nonempty")
        schemes = tuple(_canonical(s, SCHEMES, "schemes entry") for s in self.schemes)
        if len(set(schemes)) != len(schemes):
            raise ConfigurationError("schemes lists a scheme twice")
        object.__setattr__(self, "schemes", schemes)
        if not self.seeds:
            raise ConfigurationError("seeds must be nonempty")
        if any(int(s) != s or s < 0 for s in self.seeds):
            raise ConfigurationError("seeds must be non-negative integers")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        self.scenario.validate()
        if self.sweep is not None and self.sweep.variable == "flow_count":
            cap = self.scenario.layout.mr_count
            if max(self.sweep.values) > cap:
                raise ConfigurationError(f"sweep.values: flow_count above the MR count {cap}")

    def points(self) -> Tuple[str, Tuple[float, ...]]:
        """Sweep variable and values, defaulting to the configured flow count."""
        if self.sweep is None:
            return "flow_count", (self.scenario.flow_count,)
        return self.sweep.variable, self.sweep.values


# --- YAML <-> dataclasses -----------------------------------------------------

# (yaml key, dataclass attribute, to-internal, to-yaml)
_Field = Tuple[str, str, Callable[[Any], Any], Callable[[Any], Any]]


def _same(name: str, kind: Callable[[Any], Any] = float) -> _Field:
    return (name, name, kind, lambda v: v)


def _scaled(name: str, attr: str, factor: float) -> _Field:
    return (name, attr, lambda v: float(v) * factor, lambda v: v / factor)


_LAYOUT = [_same("car_count", int), _same("car_length"), _same("mr_per_car", int), _same("mr_height")]
_MOBILITY = [_scaled("speed_kmh", "speed", KMH), _same("update_period", int), _same("initial_train_offset")]
_SCENARIO = [
    _same("flow_count", int),
    _scaled("qos_min_mbps", "qos_min", 1e6),
    _scaled("qos_max_mbps", "qos_max", 1e6),
    _same("bs_height"),
    _same("bs_track_offset"),
    _same("uav_height"),
    _same("uav_distance"),
]
_ANTENNA = [
    _same("max_gain"),
    _same("half_power_beamwidth"),
    _same("side_lobe_gain"),
    _same("max_attenuation"),
    _same("clamp_main_lobe", bool),
]
_PATH_LOSS = [
    _same("break_distance"),
    _same("alpha_near"),
    _same("alpha_far"),
    _same("beta_near"),
    _same("beta_far"),
    _same("shadowing_sigma"),
    _same("shadowing_enabled", bool),
]
_RADIO = [
    _same("carrier_frequency_ghz"),
    _same("bandwidth_mhz"),
    _same("transmit_power_dbm"),
    _same("noise_density_dbm_per_mhz"),
    _same("efficiency"),
]
_RADIO_ATTR = {
    "carrier_frequency_ghz": "carrier_frequency",
    "bandwidth_mhz": "bandwidth",
    "transmit_power_dbm": "transmit_power",
    "noise_density_dbm_per_mhz": "noise_density",
    "efficiency": "efficiency",
}
_FRAME = [
    _same("slot_count", int),
    _scaled("slot_duration_us", "slot_duration", 1e-6),
    _scaled("scheduling_phase_us", "scheduling_phase", 1e-6),
]
_SCHEDULER = [_same("bs_antennas", int), _same("uav_antennas", int), _same("priority_order", str), _same("fast", bool)]

_SWEEP = [("variable", "variable", str, str), ("values", "values", float, list)]
_TOP = [(k, k, str, str) for k in ("schemes", "seeds", "completed_only", "output", "sweep")]
_TOP_KEYS = ("scenario", "channel", "frame", "scheduler", "sweep", "schemes", "seeds", "completed_only", "output")


class _Lines:
    """Dotted key path -> 1-based source line, for error messages."""

    def __init__(self, text: str):
        self.lines: Dict[str, int] = {}
        try:
            node = yaml.compose(text)
        except yaml.YAMLError:
            return
        if node is not None:
            self._walk(node, "")

    def _walk(self, node, prefix: str) -> None:
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}{k.value}"
                self.lines[path] = k.start_mark.line + 1
                self._walk(v, path + ".")

    def at(self, path: str) -> str:
        line = self.lines.get(path)
        return f" (line {line})" if line else ""


def _coerce(value: Any, kind: Callable[[Any], Any], path: str, lines: _Lines) -> Any:
    if value is None and kind is not str:
        return None
    try:
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is int:
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise TypeError
            return int(float(value))
        if kind is str:
            return str(value)
        if isinstance(value, bool):
            raise TypeError
        # YAML 1.1 reads "10e6" as a string; float() accepts it
        return float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(
            f"{path}{lines.at(path)}: expected {getattr(kind, '__name__', kind)}, got {value!r}"
        ) from None


def _section(data: Any, path: str, lines: _Lines) -> Dict[str, Any]:
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"{path}{lines.at(path)}: expected a mapping")
    return dict(data)


def _read(
    data: Mapping[str, Any], spec: List[_Field], path: str, lines: _Lines, allow: Tuple[str, ...] = ()
) -> Dict[str, Any]:
    known = {s[0] for s in spec} | set(allow)
    for k in data:
        if k not in known:
            p = f"{path}.{k}"
            raise ConfigurationError(f"{p}{lines.at(p)}: unknown key")
    out = {}
    for key, attr, conv, _ in spec:
        if key in data:
            p = f"{path}.{key}"
            raw = _coerce(data[key], _kind(conv), p, lines)
            out[attr] = raw if raw is None else conv(raw)
    return out


def _kind(conv: Callable[[Any], Any]) -> Callable[[Any], Any]:
    return conv if conv in (int, bool, str, float) else float


def _build(cls, kwargs: Dict[str, Any], path: str, lines: _Lines, spec: List[_Field], base=None):
    try:
        return replace(base, **kwargs) if base is not None else cls(**kwargs)
    except (ConfigurationError, TypeError, ValueError) as e:
        raise ConfigurationError(_locate(str(e), path, lines, spec)) from None


def _locate(msg: str, path: str, lines: _Lines, spec: List[_Field] = ()) -> str:
    """Prefix an invariant message with the YAML key it concerns and its line."""
    for key, attr, _, _ in spec:
        if re.search(rf"\b{attr}\b", msg):
            p = f"{path}.{key}" if path else key
            return f"{p}{lines.at(p)}: {msg}"
    return f"{path or '<root>'}{lines.at(path)}: {msg}"


def _part(cls, data: Any, path: str, spec: List[_Field], lines: _Lines, base=None, allow: Tuple[str, ...] = ()):
    """Build one dataclass from the mapping at ``path``."""
    raw = _read(_section(data, path, lines), spec, path, lines, allow)
    return _build(cls, raw, path, lines, spec, base)


def _parse_channel(data: Any, lines: _Lines) -> ChannelParams:
    data = _section(data, "channel", lines)
    for k in data:
        if k not in ("antenna", "path_loss", "f1", "f2", "eavesdropper_directional"):
            raise ConfigurationError(f"channel.{k}{lines.at('channel.' + k)}: unknown key")
    radios = dict(default_radios())
    # radio fields carry their unit in the YAML key; match on the attribute name
    radio_spec = [(k, a, float, lambda v: v) for k, a in _RADIO_ATTR.items()]
    for band in (Band.F1, Band.F2):
        p = f"channel.{band.value}"
        raw = _read(_section(data.get(band.value), p, lines), _RADIO, p, lines)
        kwargs = {_RADIO_ATTR[k]: v for k, v in raw.items()}
        radios[band] = _build(RadioParams, kwargs, p, lines, radio_spec, base=radios[band])
    eve = data.get("eavesdropper_directional", True)
    return ChannelParams(
        antenna=_part(AntennaParams, data.get("antenna"), "channel.antenna", _ANTENNA, lines),
        path_loss=_part(PathLossParams, data.get("path_loss"), "channel.path_loss", _PATH_LOSS, lines),
        radios=radios,
        eavesdropper_directional=_coerce(eve, bool, "channel.eavesdropper_directional", lines),
    )


def _parse_scenario(data: Any, lines: _Lines) -> ScenarioConfig:
    data = _section(data, "scenario", lines)
    kwargs = _read(data, _SCENARIO, "scenario", lines, allow=("layout", "mobility"))
    kwargs["layout"] = _part(TrainLayout, data.get("layout"), "scenario.layout", _LAYOUT, lines)
    kwargs["mobility"] = _part(MobilityConfig, data.get("mobility"), "scenario.mobility", _MOBILITY, lines)
    cfg = ScenarioConfig(**kwargs)
    for check, path, spec in (
        (cfg.layout.validate, "scenario.layout", _LAYOUT),
        (cfg.mobility.validate, "scenario.mobility", _MOBILITY),
        (cfg.validate, "scenario", _SCENARIO),
    ):
        try:
            check()
        except ConfigurationError as e:
            raise ConfigurationError(_locate(str(e), path, lines, spec)) from None
    return cfg


def _parse_list(value: Any, path: str, lines: _Lines) -> list:
    if isinstance(value, (str, int, float)) and not isinstance(value, bool):
        return [value]
    if not isinstance(value, list):
        raise ConfigurationError(f"{path}{lines.at(path)}: expected a list")
    return value


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse YAML text into an :class:`ExperimentConfig`."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        problem = getattr(e, "problem", None) or str(e)
        raise ConfigurationError(f"{where}: YAML parse error: {problem}") from None
    lines = _Lines(text)
    data = _section(data, "<root>", lines)
    for k in data:
        if k not in _TOP_KEYS:
            raise ConfigurationError(f"{k}{lines.at(str(k))}: unknown key")

    scenario = _parse_scenario(data.get("scenario"), lines)
    channel = _parse_channel(data.get("channel"), lines)
    frame = _part(FrameConfig, data.get("frame"), "frame", _FRAME, lines)
    scheduler = _part(SchedulerConfig, data.get("scheduler"), "scheduler", _SCHEDULER, lines)

    kwargs: Dict[str, Any] = dict(scenario=scenario, channel=channel, frame=frame, scheduler=scheduler)
    if data.get("sweep") is not None:
        sw = _section(data["sweep"], "sweep", lines)
        for k in sw:
            if k not in ("variable", "values"):
                raise ConfigurationError(f"sweep.{k}{lines.at('sweep.' + k)}: unknown key")
        if "variable" not in sw or "values" not in sw:
            raise ConfigurationError(f"sweep{lines.at('sweep')}: needs both 'variable' and 'values'")
        values = [_coerce(v, float, "sweep.values", lines) for v in _parse_list(sw["values"], "sweep.values", lines)]
        kwargs["sweep"] = _build(SweepSpec, {"variable": sw["variable"], "values": tuple(values)}, "sweep", lines, _SWEEP)
    if "schemes" in data:
        kwargs["schemes"] = tuple(str(s) for s in _parse_list(data["schemes"], "schemes", lines))
    if "seeds" in data:
        kwargs["seeds"] = tuple(_coerce(s, int, "seeds", lines) for s in _parse_list(data["seeds"], "seeds", lines))
    if "completed_only" in data:
        kwargs["completed_only"] = _coerce(data["completed_only"], bool, "completed_only", lines)
    if "output" in data:
        kwargs["output"] = _coerce(data["output"], str, "output", lines)
    try:
        return ExperimentConfig(**kwargs)
    except ConfigurationError as e:
        raise ConfigurationError(_locate(str(e), "", lines, _TOP)) from None


def load_config(path) -> ExperimentConfig:
    """Read an experiment config file; an empty file gives every default."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"{p}: cannot read config: {e.strerror or e}") from None
    return parse_config(text, str(p))


def _dump(obj, spec: List[_Field]) -> Dict[str, Any]:
    return {key: back(getattr(obj, attr)) for key, attr, _, back in spec}


def config_to_dict(cfg: ExperimentConfig) -> Dict[str, Any]:
    sc = cfg.scenario
    scenario = _dump(sc, _SCENARIO)
    scenario["layout"] = _dump(sc.layout, _LAYOUT)
    scenario["mobility"] = _dump(sc.mobility, _MOBILITY)
    channel: Dict[str, Any] = {
        "antenna": _dump(cfg.channel.antenna, _ANTENNA),
        "path_loss": _dump(cfg.channel.path_loss, _PATH_LOSS),
    }
    for band in (Band.F1, Band.F2):
        r = cfg.channel.radios[band]
        channel[band.value] = {k: getattr(r, a) for k, a in _RADIO_ATTR.items()}
    channel["eavesdropper_directional"] = cfg.channel.eavesdropper_directional
    out: Dict[str, Any] = {
        "scenario": scenario,
        "channel": channel,
        "frame": _dump(cfg.frame, _FRAME),
        "scheduler": _dump(cfg.scheduler, _SCHEDULER),
    }
    if cfg.sweep is not None:
        out["sweep"] = {"variable": cfg.sweep.variable, "values": list(cfg.sweep.values)}
    out["schemes"] = list(cfg.schemes)
    out["seeds"] = list(cfg.seeds)
    out["completed_only"] = cfg.completed_only
    out["output"] = cfg.output
    return out


def dump_config(cfg: ExperimentConfig) -> str:
    """YAML text that :func:`parse_config` reads back to an equal config."""
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)
