"""Discrete-event simulation of the in-train sensor network.

Channel model
-------------
Every receiver (a vehicle's cluster head, the gateway, the optional safety
gateway) owns one channel.  All channels share a global slot clock cut into
superframes::

    | P0 | P1 | ... | P(np-1) | C0 | C1 | ... | C(nc-1) |

``P`` slots are dedicated to class-0 traffic, served FIFO in arrival order,
one message per slot.  ``C`` slots are contended by classes 1 and 2.  Each
sender contends with its head-of-line message (class 1 ahead of class 2,
FIFO within class) after drawing a backoff counter uniformly from
``[0, W * 2**attempts)``, where ``W`` is ``window_slots`` for class 2 and
half of it for class 1.  Counters tick down once per contention slot; a
counter at zero transmits.  One transmitter succeeds, two or more collide.
A message that collides ``max_attempts`` times is dropped.

The safety gateway carries class-0 traffic only, so all of its slots are
dedicated slots.

In hierarchical mode the gateway channels run their superframe shifted by
``n_priority_slots + ceil(link_delay / slot_duration)`` slots, so that a
class-0 message leaving a cluster head in a dedicated slot reaches the
gateway just before the gateway's own dedicated slots open.

A transmission in a slot ``[t, t + d)`` reaches the next hop at
``t + d + link_delay`` and is eligible from the first slot starting at or
after that time.
"""

from __future__ import annotations

import bisect
import csv
import heapq
import io
import json
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .common import RailguardError, Situation
from .positioning import NORMAL_FLAGS

_EPS = 1e-12
BACKOFF_EXP_CAP = 5

GATEWAY = "gateway"
SAFETY_GATEWAY = "safety-gateway"


class NetMode(str, Enum):
    DIRECT = "DIRECT"
    HIERARCHICAL = "HIERARCHICAL"


class SensorKind(str, Enum):
    TILT = "TILT"
    PANTO_VIDEO = "PANTO_VIDEO"
    WHEEL_DEFECT = "WHEEL_DEFECT"
    HUMIDITY = "HUMIDITY"
    FIRE = "FIRE"
    POSITION_READER = "POSITION_READER"


class EmptyClassError(RailguardError, ValueError):
    """Metrics requested for a priority class with no records."""


@dataclass(frozen=True)
class SensorSpec:
    """A sensor and its situation-dependent sampling law.

    ``rate_rules`` maps a situation flag to a rate multiplier; multipliers of
    all active flags are multiplied together.  ``response_time`` is how long
    the sensor takes to answer the startup self-diagnosis (``inf`` = silent).
    ``local_only`` sensors feed on-board actuators and their messages stop
    at the cluster head.
    """

    id: str
    kind: SensorKind
    vehicle: int = 0
    base_rate: float = 1.0
    rate_rules: tuple[tuple[Situation, float], ...] = ()
    payload: int = 32
    response_time: float = 0.05
    local_only: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", SensorKind(self.kind))
        rules = self.rate_rules.items() if isinstance(self.rate_rules, Mapping) else self.rate_rules
        rules = tuple(sorted(((Situation(k), float(m)) for k, m in rules), key=lambda p: p[0].value))
        object.__setattr__(self, "rate_rules", rules)
        if not self.base_rate > 0:
            raise ValueError(f"sensor {self.id}: base_rate > 0 violated ({self.base_rate})")
        for flag, m in rules:
            if not m >= 1:
                raise ValueError(f"sensor {self.id}: multiplier >= 1 violated ({flag.value} -> {m})")
        if self.vehicle < 0:
            raise ValueError(f"sensor {self.id}: vehicle index must be >= 0")

    @property
    def rules(self) -> dict:
        return dict(self.rate_rules)


@dataclass(frozen=True)
class Superframe:
    slot_duration: float = 0.001
    n_priority_slots: int = 2
    n_contention_slots: int = 8

    def __post_init__(self):
        if not self.slot_duration > 0:
            raise ValueError("slot_duration > 0 violated")
        if self.n_priority_slots < 1:
            raise ValueError("n_priority_slots >= 1 violated")
        if self.n_contention_slots < 1:
            raise ValueError("n_contention_slots >= 1 violated")

    @property
    def n_slots(self) -> int:
        return self.n_priority_slots + self.n_contention_slots

    @property
    def length(self) -> float:
        return self.n_slots * self.slot_duration


@dataclass(frozen=True)
class Backoff:
    max_attempts: int = 6
    window_slots: int = 16

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts >= 1 violated")
        if self.window_slots < 2:
            raise ValueError("window_slots >= 2 violated")


DEFAULT_RATES = {
    # kind: (base rate Hz, rate rules)
    SensorKind.TILT: (1.0, {Situation.CURVED: 5.0}),
    SensorKind.PANTO_VIDEO: (2.0, {Situation.HIGH_SPEED: 4.0}),
    SensorKind.WHEEL_DEFECT: (2.0, {Situation.HIGH_SPEED: 4.0}),
    SensorKind.HUMIDITY: (1.0, {}),
    SensorKind.FIRE: (1.0, {}),
    SensorKind.POSITION_READER: (2.0, {}),
}

_ID_PREFIX = {
    SensorKind.TILT: "tilt",
    SensorKind.PANTO_VIDEO: "panto",
    SensorKind.WHEEL_DEFECT: "wheel",
    SensorKind.HUMIDITY: "humidity",
    SensorKind.FIRE: "fire",
    SensorKind.POSITION_READER: "reader",
}


def default_sensors(n_vehicles: int) -> tuple[SensorSpec, ...]:
    """One sensor of every kind per vehicle, ids like ``tilt-1`` (1-based vehicle)."""
    return tuple(
        SensorSpec(f"{_ID_PREFIX[kind]}-{v + 1}", kind, v, rate, rules)
        for v in range(n_vehicles)
        for kind, (rate, rules) in DEFAULT_RATES.items()
    )


@dataclass(frozen=True)
class NetworkConfig:
    mode: NetMode = NetMode.HIERARCHICAL
    sensors: tuple[SensorSpec, ...] = ()
    gateways: int = 1
    superframe: Superframe = Superframe()
    link_delay: float = 0.0002
    backoff: Backoff = Backoff()
    egress_delay: float = 0.005
    alert_rate: float = 0.0
    diagnosis_timeout: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "mode", NetMode(self.mode))
        object.__setattr__(self, "sensors", tuple(self.sensors))
        if self.gateways not in (1, 2):
            raise ValueError(f"gateways must be 1 or 2, got {self.gateways}")
        if self.link_delay < 0 or self.egress_delay < 0:
            raise ValueError("link_delay and egress_delay must be >= 0")
        if self.alert_rate < 0:
            raise ValueError("alert_rate must be >= 0")
        if not self.diagnosis_timeout > 0:
            raise ValueError("diagnosis_timeout must be > 0")
        seen = set()
        for s in self.sensors:
            if s.id in seen:
                raise ValueError(f"duplicate sensor id {s.id!r}")
            seen.add(s.id)

    def sensor(self, sensor_id: str) -> SensorSpec:
        for s in self.sensors:
            if s.id == sensor_id:
                return s
        raise KeyError(sensor_id)

    @property
    def sensor_ids(self) -> list[str]:
        return [s.id for s in self.sensors]


@dataclass(frozen=True)
class Message:
    id: int
    sensor: str
    created_at: float
    priority_class: int
    size: int
    hops_remaining: int


@dataclass(frozen=True)
class DeliveryRecord:
    """Lifecycle of one message. ``delivered_at`` is None when the message was dropped."""

    msg_id: int
    sensor: str
    priority_class: int
    created_at: float
    delivered_at: Optional[float]
    hop_count: int

    @property
    def dropped(self) -> bool:
        return self.delivered_at is None

    @property
    def latency(self) -> Optional[float]:
        return None if self.delivered_at is None else self.delivered_at - self.created_at


# ---------------------------------------------------------------------------
# sampling, priority, routing

def sampling_interval(sensor: SensorSpec, flags: Iterable[Situation]) -> float:
    rate = sensor.base_rate
    rules = sensor.rules
    for f in flags:
        rate *= rules.get(f, 1.0)
    return 1.0 / rate


_ELEVATED_BY = {
    SensorKind.TILT: Situation.CURVED,
    SensorKind.PANTO_VIDEO: Situation.HIGH_SPEED,
    SensorKind.WHEEL_DEFECT: Situation.HIGH_SPEED,
}


def priority_of(kind: SensorKind, flags: Iterable[Situation], is_alert: bool) -> int:
    """0 for alerts, 1 for routine data the current situation makes relevant, else 2."""
    if is_alert:
        return 0
    trigger = _ELEVATED_BY.get(SensorKind(kind))
    if trigger is not None and trigger in set(flags):
        return 1
    return 2


def cluster_head(vehicle: int) -> str:
    return f"ch-{vehicle + 1}"


def route_of(config: NetworkConfig, sensor: SensorSpec, cls: int) -> list[str]:
    if sensor.id not in config.sensor_ids:
        raise KeyError(f"sensor {sensor.id!r} not in network config")
    sink = SAFETY_GATEWAY if config.gateways == 2 and cls == 0 else GATEWAY
    if config.mode is NetMode.DIRECT:
        return [sink]
    if sensor.local_only:
        return [cluster_head(sensor.vehicle)]
    return [cluster_head(sensor.vehicle), sink]


# ---------------------------------------------------------------------------
# flag timeline

class FlagTimeline:
    """Piecewise-constant situation flags: ``changes`` is a list of (start time, flags)."""

    def __init__(self, changes: Sequence[tuple[float, Iterable[Situation]]] = ()):
        pts = sorted(((float(t), frozenset(f)) for t, f in changes), key=lambda p: p[0])
        self._times = [t for t, _ in pts]
        self._flags = [f for _, f in pts]

    def __call__(self, t: float) -> frozenset:
        i = bisect.bisect_right(self._times, t) - 1
        return self._flags[i] if i >= 0 else NORMAL_FLAGS

    @property
    def changes(self) -> list[tuple[float, frozenset]]:
        return list(zip(self._times, self._flags))


TimelineLike = Union[None, FlagTimeline, Callable[[float], Iterable[Situation]],
                     Sequence[tuple[float, Iterable[Situation]]]]


def as_timeline(timeline: TimelineLike) -> Callable[[float], Iterable[Situation]]:
    if timeline is None:
        return FlagTimeline()
    if callable(timeline):
        return timeline
    return FlagTimeline(timeline)


def gateway_offset(config: NetworkConfig) -> int:
    """Slot shift of the gateway superframes relative to the cluster heads."""
    if config.mode is NetMode.DIRECT:
        return 0
    sf = config.superframe
    return (sf.n_priority_slots + math.ceil(config.link_delay / sf.slot_duration - 1e-9)) % sf.n_slots


# ---------------------------------------------------------------------------
# simulation

class _Node:
    """A sender's queue on one channel (classes 1 and 2 only)."""

    __slots__ = ("queues", "hol", "counter", "attempts")

    def __init__(self):
        self.queues = (deque(), deque())  # class 1, class 2
        self.hol = None
        self.counter = 0
        self.attempts = 0


class _Channel:
    def __init__(self, name: str, priority_slots: set, offset: int = 0):
        self.name = name
        self.priority_slots = priority_slots
        self.offset = offset
        self.c0 = deque()
        self.nodes: dict[str, _Node] = {}
        self.active: list[str] = []  # senders with a head-of-line message, in activation order

    def busy(self) -> bool:
        return bool(self.c0) or bool(self.active)


class _Sim:
    def __init__(self, config: NetworkConfig, rng: np.random.Generator):
        self.cfg = config
        self.rng = rng
        sf = config.superframe
        self.d = sf.slot_duration
        self.S = sf.n_slots
        prio = set(range(sf.n_priority_slots))
        names = set()
        for s in config.sensors:
            for cls in (0, 1, 2):
                names.update(route_of(config, s, cls))
        self.channels = {}
        for name in sorted(names):
            slots = set(range(self.S)) if name == SAFETY_GATEWAY else prio
            self.channels[name] = _Channel(name, slots, gateway_offset(config) if name in (GATEWAY, SAFETY_GATEWAY) else 0)
        self.order = [self.channels[n] for n in sorted(self.channels)]
        self.heap = []  # (time, seq, msg index, hop index, sender)
        self.seq = 0
        self.routes = []
        self.delivered: dict[int, float] = {}
        self.hops_done: dict[int, int] = {}
        self.classes = []

    def push(self, t, m, hop, sender):
        heapq.heappush(self.heap, (t, self.seq, m, hop, sender))
        self.seq += 1

    def _draw(self, node: _Node, cls: int):
        w = self.cfg.backoff.window_slots
        base = max(1, w // 2) if cls == 1 else w
        node.counter = int(self.rng.integers(0, base * 2 ** min(node.attempts, BACKOFF_EXP_CAP)))

    def _next_hol(self, ch: _Channel, sender: str, node: _Node):
        node.attempts = 0
        for q in node.queues:
            if q:
                node.hol = q.popleft()
                self._draw(node, self.classes[node.hol[0]])
                return
        node.hol = None
        ch.active.remove(sender)

    def _enqueue(self, m, hop, sender):
        ch = self.channels[self.routes[m][hop]]
        cls = self.classes[m]
        if cls == 0:
            ch.c0.append((m, hop))
            return
        node = ch.nodes.get(sender)
        if node is None:
            node = ch.nodes[sender] = _Node()
        node.queues[cls - 1].append((m, hop))
        if node.hol is None:
            ch.active.append(sender)
            self._next_hol(ch, sender, node)

    def _complete(self, ch: _Channel, m, hop, t_end):
        t_arr = t_end + self.cfg.link_delay
        self.hops_done[m] = hop + 1
        if hop + 1 == len(self.routes[m]):
            self.delivered[m] = t_arr
        else:
            self.push(t_arr, m, hop + 1, ch.name)

    def _contention(self, ch: _Channel, t_end):
        if not ch.active:
            return
        tx = [s for s in ch.active if ch.nodes[s].counter == 0]
        for s in ch.active:
            node = ch.nodes[s]
            if node.counter > 0:
                node.counter -= 1
        if len(tx) == 1:
            s = tx[0]
            node = ch.nodes[s]
            m, hop = node.hol
            self._complete(ch, m, hop, t_end)
            self._next_hol(ch, s, node)
        elif len(tx) > 1:
            for s in tx:
                node = ch.nodes[s]
                node.attempts += 1
                if node.attempts >= self.cfg.backoff.max_attempts:
                    self._next_hol(ch, s, node)  # HOL message dropped
                else:
                    self._draw(node, self.classes[node.hol[0]])

    def run(self):
        d, S = self.d, self.S
        j = 0
        while True:
            busy = any(ch.busy() for ch in self.order)
            if not busy:
                if not self.heap:
                    break
                j = max(j, math.ceil(self.heap[0][0] / d - 1e-9))
            t0 = j * d
            while self.heap and self.heap[0][0] <= t0 + _EPS:
                _, _, m, hop, sender = heapq.heappop(self.heap)
                self._enqueue(m, hop, sender)
            t_end = t0 + d
            for ch in self.order:
                if (j - ch.offset) % S in ch.priority_slots:
                    if ch.c0:
                        m, hop = ch.c0.popleft()
                        self._complete(ch, m, hop, t_end)
                else:
                    self._contention(ch, t_end)
            j += 1


def _emissions(config: NetworkConfig, timeline, duration: float, rng: np.random.Generator):
    """(time, is_alert rank, sensor index, class) for every routine sample."""
    out = []
    for k, s in enumerate(config.sensors):
        t = float(rng.uniform(0.0, sampling_interval(s, timeline(0.0))))
        while t < duration:
            flags = timeline(t)
            out.append((t, 1, k, priority_of(s.kind, flags, False)))
            t += sampling_interval(s, flags)
    return out


def run_network(config: NetworkConfig, flag_timeline: TimelineLike, alerts: Sequence[tuple[float, str]],
                duration: float, seed: int) -> list[DeliveryRecord]:
    """Simulate the network for ``duration`` seconds of sensor activity.

    Sensors sample on ``[0, duration)`` at the rate the flags active at each
    sample time dictate; ``alerts`` inject class-0 messages.  The simulation
    then runs until every message is delivered or dropped.  Records come
    back sorted by message id; ids follow creation order.
    """
    if not duration > 0:
        raise ValueError("duration must be > 0")
    timeline = as_timeline(flag_timeline)
    rng = np.random.default_rng(seed)
    index = {s.id: k for k, s in enumerate(config.sensors)}
    events = _emissions(config, timeline, duration, rng)
    for t, sid in alerts:
        if sid not in index:
            raise KeyError(f"alert source {sid!r} not in network config")
        events.append((float(t), 0, index[sid], 0))
    events.sort(key=lambda e: (e[0], e[1], e[2]))

    sim = _Sim(config, rng)
    msgs = []
    for m, (t, _, k, cls) in enumerate(events):
        sensor = config.sensors[k]
        route = route_of(config, sensor, cls)
        msgs.append(Message(m, sensor.id, t, cls, sensor.payload, len(route)))
        sim.routes.append(route)
        sim.classes.append(cls)
        sim.push(t, m, 0, sensor.id)
    sim.run()
    return [
        DeliveryRecord(msg.id, msg.sensor, msg.priority_class, msg.created_at,
                       sim.delivered.get(msg.id), sim.hops_done.get(msg.id, 0))
        for msg in msgs
    ]


def synthetic_alerts(config: NetworkConfig, rate: float, duration: float, seed: int) -> list[tuple[float, str]]:
    """Class-0 alert load: one alert per ``1/rate`` window at a seeded uniform
    offset inside the window, from a seeded, uniformly chosen sensor."""
    if rate <= 0 or not config.sensors:
        return []
    rng = np.random.default_rng([seed, 0xA1E27])
    n = int(math.ceil(duration * rate - 1e-9))
    offsets = rng.uniform(0.0, 1.0 / rate, size=n)
    picks = rng.integers(0, len(config.sensors), size=n)
    out = []
    for i in range(n):
        t = i / rate + float(offsets[i])
        if t < duration:
            out.append((t, config.sensors[int(picks[i])].id))
    return out


# ---------------------------------------------------------------------------
# metrics and export

def _nearest_rank(sorted_vals: Sequence[float], pct: float) -> float:
    rank = max(1, math.ceil(pct / 100.0 * len(sorted_vals) - 1e-9))
    return sorted_vals[rank - 1]


def latency_metrics(records: Sequence[DeliveryRecord], cls: int) -> dict:
    """Count, delivered ratio and latency mean/p50/p99 (nearest rank) for one class.

    Percentile fields are omitted when nothing of the class was delivered.
    """
    rs = [r for r in records if r.priority_class == cls]
    if not rs:
        raise EmptyClassError(f"no records for priority class {cls}")
    lat = sorted(r.latency for r in rs if not r.dropped)
    out = {"count": len(rs), "delivered_ratio": len(lat) / len(rs)}
    if lat:
        out["mean"] = math.fsum(lat) / len(lat)
        out["p50"] = _nearest_rank(lat, 50)
        out["p99"] = _nearest_rank(lat, 99)
    return out


def metrics_by_class(records: Sequence[DeliveryRecord]) -> dict:
    present = sorted({r.priority_class for r in records})
    return {str(c): latency_metrics(records, c) for c in present}


RECORD_HEADER = ["msg_id", "sensor", "class", "created_at", "delivered_at", "hops", "dropped"]


def records_to_csv(records: Sequence[DeliveryRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_HEADER)
    for r in records:
        w.writerow([r.msg_id, r.sensor, r.priority_class, repr(r.created_at),
                    "" if r.dropped else repr(r.delivered_at), r.hop_count, int(r.dropped)])
    return buf.getvalue()


def metrics_to_json(metrics: dict) -> str:
    return json.dumps(metrics, indent=2) + "\n"
