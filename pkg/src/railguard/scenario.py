"""Scenario documents: train configuration, hazards, and TOML load/dump.

A scenario is a TOML document with the sections ``[sim]``, ``[track]``,
``[train]``, ``[network]`` and ``[hazards]``; the full key list is in the
README.  Only ``[track]`` segments and ``sim.initial_speed`` are required.
Speeds accept a ``"<x> kmh"`` string in place of m/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import tomli
import tomli_w

from .blending import LAMBDA, JERK_MAX, SERVICE_DECEL, BlendWeights
from .brakes import (
    DEFAULT_LEVER_ARM,
    DEFAULT_MASS,
    DEFAULTS,
    _PARAMS,
    BrakeKind,
    BrakeModel,
    brake_kind,
    default_brakes,
    default_overrides,
)
from .common import AIR_DENSITY, HazardKind, RailguardError, Severity, Situation, parse_speed
from .netsim import Backoff, NetMode, NetworkConfig, SensorKind, SensorSpec, Superframe, default_sensors
from .positioning import DRIFT_RATE
from .track import TrackProfile, TrackSegment

DEFAULT_TIMESTEP = 0.01


class ScenarioError(RailguardError):
    pass


class ScenarioParseError(ScenarioError, ValueError):
    """Malformed document: bad TOML, unknown key or wrong value type."""


class ScenarioValidationError(ScenarioError, ValueError):
    """Well-formed document whose values violate an invariant."""


@dataclass(frozen=True)
class TrainConfig:
    mass: float = DEFAULT_MASS
    frontal_area: float = 12.0
    n_vehicles: int = 8
    high_speed_threshold: float = 55.56
    brakes: tuple[BrakeModel, ...] = field(default_factory=default_brakes)
    lateral_accel_limit: float = 1.0
    lever_arm: float = DEFAULT_LEVER_ARM
    side_spoiler_down_force: float = 0.0
    side_spoiler_lateral_force: float = 0.0
    service_decel: float = SERVICE_DECEL
    jerk_max: float = JERK_MAX
    blend_weights: BlendWeights = BlendWeights()
    blend_lambda: float = LAMBDA

    def __post_init__(self):
        object.__setattr__(self, "brakes", tuple(self.brakes))
        if not self.mass > 0:
            raise ValueError(f"mass > 0 violated (mass={self.mass})")
        if self.n_vehicles < 1:
            raise ValueError(f"n_vehicles >= 1 violated (n_vehicles={self.n_vehicles})")
        if not self.high_speed_threshold > 0:
            raise ValueError("high_speed_threshold > 0 violated")
        if not self.brakes:
            raise ValueError("at least one brake present violated")
        for name in ("frontal_area", "lateral_accel_limit", "lever_arm", "service_decel", "jerk_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} > 0 violated ({getattr(self, name)})")
        if self.side_spoiler_down_force < 0:
            raise ValueError("side_spoiler_down_force >= 0 violated")
        if self.blend_lambda < 0:
            raise ValueError("blend lambda >= 0 violated")


@dataclass(frozen=True)
class HazardEvent:
    time: float
    kind: HazardKind
    severity: Severity
    source_sensor: str

    def __post_init__(self):
        object.__setattr__(self, "kind", HazardKind(self.kind))
        object.__setattr__(self, "severity", Severity(self.severity))
        if not self.time >= 0:
            raise ValueError(f"hazard time >= 0 violated (time={self.time})")


@dataclass(frozen=True)
class Scenario:
    track: TrackProfile
    train: TrainConfig = TrainConfig()
    initial_speed: float = 0.0
    hazards: tuple[HazardEvent, ...] = ()
    network: Optional[NetworkConfig] = None
    seed: Optional[int] = None
    timestep: float = DEFAULT_TIMESTEP
    air_density: float = AIR_DENSITY
    drift_rate: float = DRIFT_RATE
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "hazards", tuple(self.hazards))
        if self.network is None:
            object.__setattr__(self, "network", NetworkConfig(sensors=default_sensors(self.train.n_vehicles)))
        if not self.initial_speed >= 0:
            raise ValueError(f"initial_speed >= 0 violated ({self.initial_speed})")
        if not 0 < self.timestep <= 0.1:
            raise ValueError(f"timestep in (0, 0.1] violated ({self.timestep})")
        if not self.air_density > 0:
            raise ValueError("air_density > 0 violated")
        if self.drift_rate < 0:
            raise ValueError("drift_rate >= 0 violated")
        if self.seed is not None and self.seed < 0:
            raise ValueError("seed must be an unsigned integer")
        for i in range(1, len(self.hazards)):
            a, b = self.hazards[i - 1], self.hazards[i]
            if b.time < a.time:
                raise ValueError(f"hazards sorted by time violated: hazards[{i - 1}] (t={a.time}) "
                                 f"comes before hazards[{i}] (t={b.time})")
        ids = set(self.network.sensor_ids)
        for i, h in enumerate(self.hazards):
            if h.source_sensor not in ids:
                raise ValueError(f"hazards[{i}].source_sensor {h.source_sensor!r} not in network config")
        for s in self.network.sensors:
            if s.vehicle >= self.train.n_vehicles:
                raise ValueError(f"sensor {s.id}: vehicle < n_vehicles violated "
                                 f"({s.vehicle} >= {self.train.n_vehicles})")


# ---------------------------------------------------------------------------
# loading

class _Section:
    """Typed, strict access to one table of the document."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ScenarioParseError(f"{path}: expected a table")
        self.data = data
        self.path = path
        self.used = set()

    def _get(self, key, default):
        self.used.add(key)
        return self.data.get(key, default)

    def where(self, key):
        return f"{self.path}.{key}" if self.path else key

    def number(self, key, default=None):
        v = self._get(key, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScenarioParseError(f"{self.where(key)}: expected a number, got {v!r}")
        return float(v)

    def integer(self, key, default=None):
        v = self._get(key, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            raise ScenarioParseError(f"{self.where(key)}: expected an integer, got {v!r}")
        return v

    def speed(self, key, default=None):
        v = self._get(key, default)
        if v is None:
            return None
        try:
            return parse_speed(v)
        except (TypeError, ValueError):
            raise ScenarioParseError(f"{self.where(key)}: expected a speed (m/s or '<x> kmh'), got {v!r}") from None

    def string(self, key, default=None):
        v = self._get(key, default)
        if v is not None and not isinstance(v, str):
            raise ScenarioParseError(f"{self.where(key)}: expected a string, got {v!r}")
        return v

    def boolean(self, key, default=None):
        v = self._get(key, default)
        if v is not None and not isinstance(v, bool):
            raise ScenarioParseError(f"{self.where(key)}: expected true/false, got {v!r}")
        return v

    def enum(self, key, enum_cls, default=None):
        v = self.string(key, default)
        if v is None:
            return None
        try:
            return enum_cls(v)
        except ValueError:
            choices = ", ".join(e.value for e in enum_cls)
            raise ScenarioParseError(f"{self.where(key)}: {v!r} is not one of {choices}") from None

    def numbers(self, key, default=()):
        v = self._get(key, default)
        if not isinstance(v, (list, tuple)) or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
            raise ScenarioParseError(f"{self.where(key)}: expected a list of numbers, got {v!r}")
        return tuple(float(x) for x in v)

    def table(self, key) -> "_Section":
        v = self._get(key, {})
        return _Section(v, self.where(key))

    def tables(self, key) -> list["_Section"]:
        v = self._get(key, [])
        if not isinstance(v, list):
            raise ScenarioParseError(f"{self.where(key)}: expected an array of tables")
        return [_Section(x, f"{self.where(key)}[{i}]") for i, x in enumerate(v)]

    def has(self, key) -> bool:
        return key in self.data

    def done(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ScenarioParseError(f"{self.path or 'document'}: unknown key(s) {', '.join(extra)}")


def _kw(**kwargs):
    return {k: v for k, v in kwargs.items() if v is not None}


def _build(path: str, ctor, **kwargs):
    try:
        return ctor(**kwargs)
    except ValueError as exc:
        raise ScenarioValidationError(f"{path}: {exc}") from None


def _parse_brake(sec: _Section, mass: float) -> BrakeModel:
    kind_text = sec.string("kind")
    if kind_text is None:
        raise ScenarioParseError(f"{sec.path}: missing 'kind'")
    try:
        kind = brake_kind(kind_text)
    except ValueError as exc:
        raise ScenarioParseError(f"{sec.where('kind')}: {exc}") from None
    params = dict(DEFAULTS[kind])
    params.update(default_overrides(kind, mass))
    for p in _PARAMS[kind]:
        v = sec.speed(p) if p == "critical_speed" else sec.number(p)
        if v is not None:
            params[p] = v
    if kind is BrakeKind.SPOILER:
        if sec.has("angle_range"):
            rng = sec.numbers("angle_range")
            if len(rng) != 2:
                raise ScenarioParseError(f"{sec.where('angle_range')}: expected [min, max]")
            params["angle_range"] = rng
        st = sec.string("spoiler_type")
        if st is not None:
            params["spoiler_type"] = st
    params.update(_kw(response_time=sec.number("response_time"), efficiency=sec.number("efficiency"),
                      comfort=sec.number("comfort"), available=sec.boolean("available"),
                      name=sec.string("name")))
    sec.done()
    return _build(sec.path, BrakeModel, kind=kind, **params)


def _parse_train(sec: _Section) -> TrainConfig:
    mass = sec.number("mass", DEFAULT_MASS)
    brake_secs = sec.tables("brakes")
    brakes = tuple(_parse_brake(b, mass) for b in brake_secs) if brake_secs else default_brakes(mass)
    blend = sec.table("blend")
    weights = _build(blend.path, BlendWeights, **_kw(
        w_response=blend.number("w_response"), w_efficiency=blend.number("w_efficiency"),
        w_comfort=blend.number("w_comfort")))
    lam = blend.number("lambda")
    blend.done()
    kwargs = _kw(
        frontal_area=sec.number("frontal_area"), n_vehicles=sec.integer("n_vehicles"),
        high_speed_threshold=sec.speed("high_speed_threshold"),
        lateral_accel_limit=sec.number("lateral_accel_limit"), lever_arm=sec.number("lever_arm"),
        side_spoiler_down_force=sec.number("side_spoiler_down_force"),
        side_spoiler_lateral_force=sec.number("side_spoiler_lateral_force"),
        service_decel=sec.number("service_decel"), jerk_max=sec.number("jerk_max"),
        blend_lambda=lam)
    sec.done()
    return _build(sec.path, TrainConfig, mass=mass, brakes=brakes, blend_weights=weights, **kwargs)


def _parse_sensor(sec: _Section) -> SensorSpec:
    sid = sec.string("id")
    if sid is None:
        raise ScenarioParseError(f"{sec.path}: missing 'id'")
    kind = sec.enum("kind", SensorKind)
    if kind is None:
        raise ScenarioParseError(f"{sec.path}: missing 'kind'")
    rules_sec = sec.table("rate_rules")
    rules = {}
    for key in list(rules_sec.data):
        try:
            flag = Situation(key)
        except ValueError:
            raise ScenarioParseError(f"{rules_sec.where(key)}: unknown situation flag") from None
        rules[flag] = rules_sec.number(key)
    rules_sec.done()
    kwargs = _kw(vehicle=sec.integer("vehicle"), base_rate=sec.number("base_rate"),
                 payload=sec.integer("payload"), response_time=sec.number("response_time"),
                 local_only=sec.boolean("local_only"))
    sec.done()
    return _build(sec.path, SensorSpec, id=sid, kind=kind, rate_rules=rules, **kwargs)


def _parse_network(sec: _Section, n_vehicles: int) -> NetworkConfig:
    sf = sec.table("superframe")
    superframe = _build(sf.path, Superframe, **_kw(
        slot_duration=sf.number("slot_duration"), n_priority_slots=sf.integer("n_priority_slots"),
        n_contention_slots=sf.integer("n_contention_slots")))
    sf.done()
    bo = sec.table("backoff")
    backoff = _build(bo.path, Backoff, **_kw(max_attempts=bo.integer("max_attempts"),
                                             window_slots=bo.integer("window_slots")))
    bo.done()
    sensor_secs = sec.tables("sensors")
    sensors = tuple(_parse_sensor(s) for s in sensor_secs) if sensor_secs else default_sensors(n_vehicles)
    kwargs = _kw(mode=sec.enum("mode", NetMode), gateways=sec.integer("gateways"),
                 link_delay=sec.number("link_delay"), egress_delay=sec.number("egress_delay"),
                 alert_rate=sec.number("alert_rate"), diagnosis_timeout=sec.number("diagnosis_timeout"))
    sec.done()
    return _build(sec.path, NetworkConfig, sensors=sensors, superframe=superframe, backoff=backoff, **kwargs)


def _parse_track(sec: _Section) -> TrackProfile:
    segs = []
    for s in sec.tables("segments"):
        radius = s._get("radius", math.inf)
        if isinstance(radius, str) and radius.strip().lower() in ("inf", "infinite", "straight"):
            radius = math.inf
        if isinstance(radius, bool) or not isinstance(radius, (int, float)):
            raise ScenarioParseError(f"{s.where('radius')}: expected a number or 'inf', got {radius!r}")
        length = s.number("length")
        if length is None:
            raise ScenarioParseError(f"{s.path}: missing 'length'")
        seg = _build(s.path, TrackSegment, length=length, radius=float(radius),
                     grade=s.number("grade", 0.0), tag_positions=s.numbers("tags", ()))
        s.done()
        segs.append(seg)
    sec.done()
    if not segs:
        raise ScenarioValidationError("track: at least one segment required (track.segments is empty)")
    return TrackProfile(tuple(segs))


def _parse_hazards(sec: _Section) -> list[HazardEvent]:
    out = []
    for h in sec.tables("events"):
        time, kind = h.number("time"), h.enum("kind", HazardKind)
        severity, src = h.enum("severity", Severity), h.string("source_sensor")
        for key, val in (("time", time), ("kind", kind), ("severity", severity), ("source_sensor", src)):
            if val is None:
                raise ScenarioParseError(f"{h.path}: missing '{key}'")
        h.done()
        out.append(_build(h.path, HazardEvent, time=time, kind=kind, severity=severity, source_sensor=src))
    sec.done()
    return out


def load_scenario(text: str, name: str = "") -> Scenario:
    """Parse and validate a scenario document.

    Raises:
        ScenarioParseError: malformed TOML (message carries line/column),
            unknown keys or wrongly typed values (message carries the key path).
        ScenarioValidationError: a value breaks an invariant; the message
            names the invariant.
    """
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ScenarioParseError(f"scenario document is not valid TOML: {exc}") from None
    root = _Section(data, "")
    sim = root.table("sim")
    initial_speed = sim.speed("initial_speed")
    if initial_speed is None:
        raise ScenarioParseError("sim.initial_speed is required")
    seed = sim.integer("seed")
    sim_kwargs = _kw(timestep=sim.number("timestep"), air_density=sim.number("air_density"),
                     drift_rate=sim.number("drift_rate"))
    doc_name = sim.string("name")
    sim.done()
    if not root.has("track"):
        raise ScenarioParseError("[track] section is required")
    track = _parse_track(root.table("track"))
    train = _parse_train(root.table("train"))
    network = _parse_network(root.table("network"), train.n_vehicles)
    hazards = _parse_hazards(root.table("hazards"))
    root.done()
    return _build("scenario", Scenario, track=track, train=train, initial_speed=initial_speed,
                  hazards=tuple(hazards), network=network, seed=seed, name=doc_name or name, **sim_kwargs)


def load_scenario_file(path) -> Scenario:
    from pathlib import Path

    p = Path(path)
    return load_scenario(p.read_text(encoding="utf-8"), name=p.stem)


# ---------------------------------------------------------------------------
# serialization

def _brake_doc(b: BrakeModel) -> dict:
    d: dict[str, Any] = {"kind": b.kind.value, "name": b.name}
    for p in _PARAMS[b.kind]:
        d[p] = getattr(b, p)
    if b.kind is BrakeKind.SPOILER:
        d["angle_range"] = list(b.angle_range)
        d["spoiler_type"] = b.spoiler_type.value
    d.update(response_time=b.response_time, efficiency=b.efficiency, comfort=b.comfort, available=b.available)
    return d


def scenario_to_dict(sc: Scenario) -> dict:
    sim: dict[str, Any] = {"initial_speed": sc.initial_speed, "timestep": sc.timestep,
                           "air_density": sc.air_density, "drift_rate": sc.drift_rate}
    if sc.seed is not None:
        sim["seed"] = sc.seed
    if sc.name:
        sim["name"] = sc.name
    t = sc.train
    net = sc.network
    return {
        "sim": sim,
        "track": {"segments": [
            {"length": s.length, "radius": s.radius, "grade": s.grade, "tags": list(s.tag_positions)}
            for s in sc.track.segments]},
        "train": {
            "mass": t.mass, "frontal_area": t.frontal_area, "n_vehicles": t.n_vehicles,
            "high_speed_threshold": t.high_speed_threshold, "lateral_accel_limit": t.lateral_accel_limit,
            "lever_arm": t.lever_arm, "side_spoiler_down_force": t.side_spoiler_down_force,
            "side_spoiler_lateral_force": t.side_spoiler_lateral_force,
            "service_decel": t.service_decel, "jerk_max": t.jerk_max,
            "blend": {"w_response": t.blend_weights.w_response, "w_efficiency": t.blend_weights.w_efficiency,
                      "w_comfort": t.blend_weights.w_comfort, "lambda": t.blend_lambda},
            "brakes": [_brake_doc(b) for b in t.brakes],
        },
        "network": {
            "mode": net.mode.value, "gateways": net.gateways, "link_delay": net.link_delay,
            "egress_delay": net.egress_delay, "alert_rate": net.alert_rate,
            "diagnosis_timeout": net.diagnosis_timeout,
            "superframe": {"slot_duration": net.superframe.slot_duration,
                           "n_priority_slots": net.superframe.n_priority_slots,
                           "n_contention_slots": net.superframe.n_contention_slots},
            "backoff": {"max_attempts": net.backoff.max_attempts, "window_slots": net.backoff.window_slots},
            "sensors": [
                {"id": s.id, "kind": s.kind.value, "vehicle": s.vehicle, "base_rate": s.base_rate,
                 "payload": s.payload, "response_time": s.response_time, "local_only": s.local_only,
                 "rate_rules": {f.value: m for f, m in s.rate_rules}}
                for s in net.sensors],
        },
        "hazards": {"events": [
            {"time": h.time, "kind": h.kind.value, "severity": h.severity.value, "source_sensor": h.source_sensor}
            for h in sc.hazards]},
    }


def dump_scenario(sc: Scenario) -> str:
    """Serialize to a TOML document that :func:`load_scenario` reads back to an equal value."""
    return tomli_w.dumps(scenario_to_dict(sc))
