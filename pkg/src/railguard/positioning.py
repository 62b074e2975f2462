"""Tag-plus-odometry positioning, startup self-diagnosis and situation classification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import AbstractSet, Iterable, Optional, Sequence

from .common import HazardKind, RailguardError, Situation

DRIFT_RATE = 0.01  # odometry uncertainty per metre travelled
TAG_SLACK = 1.0  # m

SituationFlags = frozenset  # frozenset[Situation]

_FAULT_FLAGS = {
    HazardKind.WHEEL_FAULT: Situation.WHEEL_FAULT,
    HazardKind.FIRE: Situation.FIRE,
    HazardKind.PANTOGRAPH_FAULT: Situation.PANTOGRAPH_RISK,
}

NORMAL_FLAGS = frozenset({Situation.NORMAL})


class PositioningError(RailguardError, ValueError):
    pass


class DiagnosisError(RailguardError):
    """Startup self-diagnosis failed or could not run."""

    def __init__(self, message: str, report: Optional["DiagnosisReport"] = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class PositionEstimate:
    chainage: float
    uncertainty: float = 0.0
    last_tag_chainage: Optional[float] = None
    time: float = 0.0


def update_position(prev: PositionEstimate, speed: float, dt: float, tag_read: Optional[float] = None,
                    drift_rate: float = DRIFT_RATE) -> PositionEstimate:
    """Advance the estimate by dead reckoning, or snap to a tag if one was read.

    A tag read is taken as exact.  A tag lying further behind the previous
    estimate than its uncertainty allows (plus 1 m slack) is rejected.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if speed < 0:
        raise ValueError("speed must be >= 0")
    t = prev.time + dt
    if tag_read is not None:
        if tag_read < prev.chainage - (prev.uncertainty + TAG_SLACK):
            raise PositioningError(
                f"inconsistent tag at {tag_read} m: estimate {prev.chainage} m +/- {prev.uncertainty} m")
        return PositionEstimate(float(tag_read), 0.0, float(tag_read), t)
    step = speed * dt
    return PositionEstimate(prev.chainage + step, prev.uncertainty + drift_rate * step,
                            prev.last_tag_chainage, t)


@dataclass(frozen=True)
class DiagnosisReport:
    passed: bool
    silent_sensors: tuple[str, ...]
    timestamp: float = 0.0

    def to_dict(self) -> dict:
        return {"pass": self.passed, "silent_sensors": list(self.silent_sensors), "timestamp": self.timestamp}


def self_diagnosis(sensor_ids: Sequence[str], responses: AbstractSet[str], timestamp: float = 0.0) -> DiagnosisReport:
    if len(sensor_ids) == 0:
        raise DiagnosisError("self-diagnosis needs at least one sensor (misconfigured train)")
    silent = tuple(s for s in sensor_ids if s not in responses)
    return DiagnosisReport(not silent, silent, timestamp)


def classify_situation(speed: float, curvature: float, active_faults: Iterable, train) -> frozenset:
    """Situation flags for the current operating point.

    Any non-zero curvature counts as curved.  OBSTACLE hazards have no
    situation flag of their own.
    """
    if speed < 0 or curvature < 0:
        raise ValueError("speed and curvature must be >= 0")
    flags = set()
    if curvature > 0:
        flags.add(Situation.CURVED)
    if speed >= train.high_speed_threshold:
        flags.add(Situation.HIGH_SPEED)
    for kind in active_faults:
        flag = _FAULT_FLAGS.get(HazardKind(kind))
        if flag is not None:
            flags.add(flag)
    return frozenset(flags) if flags else NORMAL_FLAGS


def flags_str(flags: Iterable[Situation]) -> str:
    return "|".join(sorted(f.value for f in flags))
