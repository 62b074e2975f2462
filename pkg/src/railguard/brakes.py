"""Brake force laws, longitudinal stop integration and cornering stability."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .common import AIR_DENSITY, G, RailguardError
from .spoiler import SpoilerType, drag_coefficient, spoiler_type
from .track import TrackProfile, grade_at

V_STOP = 1e-6  # m/s
REGEN_V_EPS = 0.1  # m/s, guards max_power / speed
DEFAULT_MASS = 400_000.0
# 300 km/h stopped in 2816 m: a = v^2 / (2 d) = 83.333^2 / 5632
CALIBRATION_DECEL = 1.2330
DEFAULT_LEVER_ARM = 1.8


class BrakeKind(str, Enum):
    FRICTION = "Friction"
    REGENERATIVE = "Regenerative"
    EDDY_CURRENT = "EddyCurrent"
    SPOILER = "Spoiler"


KIND_ORDER = {k: i for i, k in enumerate(BrakeKind)}

_KIND_ALIASES = {
    "friction": BrakeKind.FRICTION,
    "regenerative": BrakeKind.REGENERATIVE,
    "regen": BrakeKind.REGENERATIVE,
    "eddycurrent": BrakeKind.EDDY_CURRENT,
    "eddy_current": BrakeKind.EDDY_CURRENT,
    "ecb": BrakeKind.EDDY_CURRENT,
    "spoiler": BrakeKind.SPOILER,
}


def brake_kind(value) -> BrakeKind:
    if isinstance(value, BrakeKind):
        return value
    try:
        return _KIND_ALIASES[str(value).strip().lower()]
    except KeyError:
        raise ValueError(f"unknown brake kind {value!r}") from None


# per-kind defaults; the lags and comfort scores are engineering placeholders
DEFAULTS = {
    BrakeKind.FRICTION: dict(max_force=DEFAULT_MASS * CALIBRATION_DECEL, adhesion_mu=0.15,
                             response_time=0.7, efficiency=0.0, comfort=0.6),
    BrakeKind.REGENERATIVE: dict(max_force=300_000.0, max_power=8e6,
                                 response_time=0.3, efficiency=1.0, comfort=0.1),
    BrakeKind.EDDY_CURRENT: dict(peak_force=200_000.0, critical_speed=15.0,
                                 response_time=0.15, efficiency=0.0, comfort=0.2),
    BrakeKind.SPOILER: dict(area=24.0, cd_max=1.2, angle_range=(0.0, 90.0),
                            spoiler_type=SpoilerType.MACRO_GEOMETRIC,
                            response_time=1.0, efficiency=0.0, comfort=0.8),
}

_PARAMS = {
    BrakeKind.FRICTION: ("max_force", "adhesion_mu"),
    BrakeKind.REGENERATIVE: ("max_force", "max_power"),
    BrakeKind.EDDY_CURRENT: ("peak_force", "critical_speed"),
    BrakeKind.SPOILER: ("area", "cd_max"),
}


@dataclass(frozen=True)
class BrakeModel:
    """One brake system.

    Only the parameters belonging to ``kind`` are meaningful; the rest stay
    ``None``.  Use :func:`make_brake` to get per-kind defaults filled in.

    ``efficiency`` doubles as the regeneration bonus used by the blender and
    ``comfort`` is a discomfort penalty (noise, vibration, jerk feel).
    ``available = False`` takes the brake out of service.
    """

    kind: BrakeKind
    response_time: float = 0.0
    efficiency: float = 0.0
    comfort: float = 0.0
    available: bool = True
    name: str = ""
    max_force: Optional[float] = None
    adhesion_mu: Optional[float] = None
    max_power: Optional[float] = None
    peak_force: Optional[float] = None
    critical_speed: Optional[float] = None
    area: Optional[float] = None
    cd_max: Optional[float] = None
    angle_range: tuple[float, float] = (0.0, 90.0)
    spoiler_type: SpoilerType = SpoilerType.MACRO_GEOMETRIC

    def __post_init__(self):
        object.__setattr__(self, "kind", brake_kind(self.kind))
        object.__setattr__(self, "spoiler_type", spoiler_type(self.spoiler_type))
        object.__setattr__(self, "angle_range", tuple(float(a) for a in self.angle_range))
        if not self.name:
            object.__setattr__(self, "name", self.kind.value.lower())
        for p in _PARAMS[self.kind]:
            val = getattr(self, p)
            if val is None or not val > 0:
                raise ValueError(f"{self.kind.value} brake: {p} > 0 violated ({p}={val})")
        if self.kind is BrakeKind.SPOILER:
            lo, hi = self.angle_range
            if not 0.0 <= lo < hi <= 90.0:
                raise ValueError(f"spoiler angle_range must satisfy 0 <= lo < hi <= 90, got {self.angle_range}")
        if not self.response_time >= 0:
            raise ValueError(f"response_time >= 0 violated ({self.response_time})")
        for w in ("efficiency", "comfort"):
            if not 0.0 <= getattr(self, w) <= 1.0:
                raise ValueError(f"0 <= {w} <= 1 violated ({getattr(self, w)})")


def make_brake(kind, **overrides) -> BrakeModel:
    kind = brake_kind(kind)
    params = dict(DEFAULTS[kind])
    params.update(overrides)
    return BrakeModel(kind=kind, **params)


def default_brakes(mass: float = DEFAULT_MASS) -> tuple[BrakeModel, ...]:
    """One brake of each kind; the friction brake is sized to the calibration deceleration."""
    return tuple(make_brake(k, **default_overrides(k, mass)) for k in BrakeKind)


def default_overrides(kind: BrakeKind, mass: float) -> dict:
    if kind is BrakeKind.FRICTION:
        return {"max_force": mass * CALIBRATION_DECEL}
    return {}


def calibrated_friction(mass: float = DEFAULT_MASS, decel: float = CALIBRATION_DECEL, **overrides) -> BrakeModel:
    """Lag-free friction brake giving a constant ``decel`` with ample adhesion."""
    params = dict(max_force=mass * decel, adhesion_mu=1.0, response_time=0.0)
    params.update(overrides)
    return make_brake(BrakeKind.FRICTION, **params)


# ---------------------------------------------------------------------------
# force laws

def friction_force(model: BrakeModel, u: float, speed: float, mass: float) -> float:
    return min(u * model.max_force, model.adhesion_mu * mass * G)


def regen_force(model: BrakeModel, u: float, speed: float) -> float:
    return u * min(model.max_force, model.max_power / max(speed, REGEN_V_EPS))


def ecb_force(model: BrakeModel, u: float, speed: float) -> float:
    x = speed / model.critical_speed
    return u * model.peak_force * (2.0 * x) / (1.0 + x * x)


def spoiler_angle(model: BrakeModel, u: float) -> float:
    lo, hi = model.angle_range
    return lo + u * (hi - lo)


def spoiler_drag_force(model: BrakeModel, angle: float, speed: float, air_density: float = AIR_DENSITY) -> float:
    lo, hi = model.angle_range
    if not lo <= angle <= hi:
        raise ValueError(f"spoiler angle {angle} outside range [{lo}, {hi}]")
    cd = drag_coefficient(model.spoiler_type, angle, model.cd_max)
    return 0.5 * air_density * cd * model.area * speed * speed


def brake_force(model: BrakeModel, u: float, speed: float, mass: float, air_density: float = AIR_DENSITY) -> float:
    """Force (N) delivered by ``model`` at activation ``u`` once any lag has settled."""
    kind = model.kind
    if kind is BrakeKind.FRICTION:
        return friction_force(model, u, speed, mass)
    if kind is BrakeKind.REGENERATIVE:
        return regen_force(model, u, speed)
    if kind is BrakeKind.EDDY_CURRENT:
        return ecb_force(model, u, speed)
    if u <= 0.0:
        return 0.0  # retracted; counter-flow drag at 0 deg applies only once deployed
    return spoiler_drag_force(model, spoiler_angle(model, u), speed, air_density)


# ---------------------------------------------------------------------------
# integration

class CommandError(RailguardError, ValueError):
    """Controller produced a malformed brake command."""


@dataclass
class TrainState:
    t: float
    position: float
    speed: float
    accel: float
    command: tuple[float, ...]
    forces: tuple[float, ...]


Controller = Callable[[float, TrainState], Sequence[float]]

TRAJECTORY_COLUMNS = ("t", "s", "v", "a", "F_friction", "F_regen", "F_ecb", "F_spoiler")
_KIND_COLUMN = {BrakeKind.FRICTION: 4, BrakeKind.REGENERATIVE: 5, BrakeKind.EDDY_CURRENT: 6, BrakeKind.SPOILER: 7}


@dataclass
class StopResult:
    """Outcome of a stop integration.

    ``stopped`` is False when the run ended at the track end or at
    ``max_duration`` with the train still moving.
    """

    distance: float
    duration: float
    trajectory: np.ndarray  # columns per TRAJECTORY_COLUMNS
    peak_jerk: float
    regenerated_energy: float
    stopped: bool = True
    final_speed: float = 0.0
    start_position: float = 0.0

    @property
    def end_position(self) -> float:
        return self.start_position + self.distance


def check_command(command: Sequence[float], n: int) -> tuple[float, ...]:
    cmd = tuple(float(u) for u in command)
    if len(cmd) != n:
        raise CommandError(f"command has {len(cmd)} entries, expected {n}")
    for i, u in enumerate(cmd):
        if not 0.0 <= u <= 1.0:
            raise CommandError(f"command[{i}] = {u} outside [0, 1]")
    return cmd


def full_apply(brakes: Sequence[BrakeModel]) -> Controller:
    """Controller holding every available brake at u = 1."""
    cmd = tuple(1.0 if b.available else 0.0 for b in brakes)
    return lambda t, state: cmd


def integrate_stop(
    train,
    brakes: Sequence[BrakeModel],
    controller: Controller,
    track: TrackProfile,
    v0: float,
    *,
    timestep: float = 0.01,
    s0: float = 0.0,
    air_density: float = AIR_DENSITY,
    stop_at_track_end: bool = True,
    max_duration: float = 3600.0,
) -> StopResult:
    """Integrate the braking run from speed ``v0`` at chainage ``s0`` until standstill.

    Semi-implicit Euler at a fixed step: speed is advanced first and the
    new speed moves the train.  Each brake's delivered force relaxes toward
    its commanded force with a first-order lag; the force acting during a
    step is the exact average of the lag response over that step.
    Grade adds ``m g grade`` of resistance; past the track end (when
    ``stop_at_track_end`` is False) the track is taken as level.
    """
    if v0 < 0:
        raise ValueError("v0 must be >= 0")
    if not 0 < timestep:
        raise ValueError("timestep must be > 0")
    mass = train.mass
    n = len(brakes)
    dt = timestep
    end = track.total_length
    # lag over one step with the command held: end value moves by alpha, the
    # step average by beta (exact integrals of the exponential response)
    alpha = [1.0 if b.response_time == 0 else -math.expm1(-dt / b.response_time) for b in brakes]
    beta = [1.0 if b.response_time == 0 else 1.0 - b.response_time / dt * alpha[i] for i, b in enumerate(brakes)]
    regen_idx = [i for i, b in enumerate(brakes) if b.kind is BrakeKind.REGENERATIVE]
    cols = [_KIND_COLUMN[b.kind] for b in brakes]

    def row(t, s, v, a, forces):
        r = [t, s, v, a, 0.0, 0.0, 0.0, 0.0]
        for c, f in zip(cols, forces):
            r[c] += f
        return r

    lagged = [0.0] * n  # lag state at the step boundary
    forces = [0.0] * n  # mean force over the last step
    rows = [row(0.0, s0, v0, 0.0, forces)]
    if v0 <= V_STOP:
        return StopResult(0.0, 0.0, np.array(rows), 0.0, 0.0, True, v0, s0)

    t, s, v = 0.0, s0, v0
    command = (0.0,) * n
    a_prev = None
    peak_jerk = 0.0
    energy = 0.0
    stopped = False
    steps = 0
    while True:
        state = TrainState(t, s, v, rows[-1][3], command, tuple(forces))
        command = check_command(controller(t, state), n)
        for i, b in enumerate(brakes):
            target = brake_force(b, command[i], v, mass, air_density) if b.available else 0.0
            forces[i] = lagged[i] + (target - lagged[i]) * beta[i]
            lagged[i] += (target - lagged[i]) * alpha[i]
        grade = grade_at(track, s) if s <= end else 0.0
        a = -(math.fsum(forces) + mass * G * grade) / mass
        v_new = v + a * dt
        if v_new <= V_STOP:
            v_new = 0.0
            stopped = True
        s_new = s + v_new * dt
        if stop_at_track_end and s_new >= end:
            s_new = end
        energy += sum(forces[i] for i in regen_idx) * (s_new - s)
        if a_prev is not None:
            peak_jerk = max(peak_jerk, abs(a - a_prev) / dt)
        a_prev = a
        steps += 1
        t = steps * dt
        s, v = s_new, v_new
        rows.append(row(t, s, v, a, forces))
        if stopped:
            break
        if stop_at_track_end and s >= end:
            break
        if t >= max_duration:
            break
    return StopResult(s - s0, t, np.array(rows), peak_jerk, energy, stopped, v, s0)


def trajectory_to_csv(result: StopResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for r in result.trajectory:
        w.writerow([repr(float(x)) for x in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# cornering

@dataclass(frozen=True)
class StabilityReport:
    lateral_accel: float
    effective_limit: float
    margin: float
    stable: bool
    spoiler_moment: float


def cornering_stability(train, speed: float, radius: float, down_force: float = 0.0,
                        lateral_force: float = 0.0) -> StabilityReport:
    """Quasi-static point-mass cornering check with side-spoiler forces.

    ``lateral_force`` is signed, positive pointing outward.  Spoiler
    downforce raises the usable lateral limit in proportion to the extra
    normal load.
    """
    if not radius > 0:
        raise ValueError(f"radius must be > 0 or INFINITE, got {radius}")
    if speed < 0:
        raise ValueError("speed must be >= 0")
    if down_force < 0:
        raise ValueError("down_force must be >= 0")
    mass = train.mass
    centripetal = 0.0 if math.isinf(radius) else speed * speed / radius
    lateral_accel = centripetal + lateral_force / mass
    limit = train.lateral_accel_limit * (1.0 + down_force / (mass * G))
    margin = limit - lateral_accel
    lever = getattr(train, "lever_arm", DEFAULT_LEVER_ARM)
    return StabilityReport(lateral_accel, limit, margin, margin >= 0, lateral_force * lever)
