"""End-to-end runs: cruise, hazard alert through the network, then the stop."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .blending import BlendingController, BrakingMode, select_mode
from .brakes import BrakeKind, StopResult, StabilityReport, cornering_stability, full_apply, integrate_stop
from .common import RailguardError
from .netsim import DeliveryRecord, FlagTimeline, metrics_by_class, run_network, synthetic_alerts
from .positioning import (
    DiagnosisError,
    DiagnosisReport,
    PositionEstimate,
    classify_situation,
    flags_str,
    self_diagnosis,
    update_position,
)
from .scenario import Scenario
from .track import curvature_at, radius_at, tags_between


class RunError(RailguardError):
    pass


def _clip(track, s: float) -> float:
    return min(max(s, 0.0), track.total_length)


def diagnose(scenario: Scenario) -> DiagnosisReport:
    """Startup self-diagnosis: sensors answering within the timeout count as alive."""
    net = scenario.network
    responses = {s.id for s in net.sensors if s.response_time <= net.diagnosis_timeout}
    return self_diagnosis(net.sensor_ids, responses, timestamp=net.diagnosis_timeout)


@dataclass
class CruiseLog:
    """Constant-speed cruise from chainage 0: flag changes and the running position estimate."""

    timeline: FlagTimeline
    estimate: PositionEstimate
    end_time: float


def cruise(scenario: Scenario, until: float) -> CruiseLog:
    """Cruise at the initial speed for ``until`` seconds, one timestep at a time.

    Tags crossed during a step split the step so the estimate snaps to the
    tag at the instant it is passed.  Past the track end the last segment's
    geometry is held.
    """
    track = scenario.track
    v = scenario.initial_speed
    dt = scenario.timestep
    faults_at = [(h.time, h.kind) for h in scenario.hazards]
    est = PositionEstimate(0.0, 0.0, None, 0.0)
    changes = []
    last_flags = None
    n = int(math.ceil(until / dt - 1e-9)) if until > 0 else 0
    t = 0.0
    for k in range(n + 1):
        faults = {kind for ht, kind in faults_at if ht <= t}
        s_true = v * t
        flags = classify_situation(v, curvature_at(track, _clip(track, s_true)), faults, scenario.train)
        if flags != last_flags:
            changes.append((t, flags))
            last_flags = flags
        if k == n:
            break
        t_next = min((k + 1) * dt, until)
        step = t_next - t
        if step <= 0:
            break
        s_next = v * t_next
        t_cur = t
        for tag in tags_between(track, s_true, s_next) if v > 0 else ():
            t_tag = max(tag / v, t_cur)
            if t_tag > t_cur:
                est = update_position(est, v, t_tag - t_cur, tag_read=tag, drift_rate=scenario.drift_rate)
            else:
                est = PositionEstimate(tag, 0.0, tag, t_cur)
            t_cur = t_tag
        if t_next > t_cur:
            est = update_position(est, v, t_next - t_cur, drift_rate=scenario.drift_rate)
        t = t_next
    return CruiseLog(FlagTimeline(changes), est, t)


def network_alerts(scenario: Scenario, duration: float, seed: int) -> list[tuple[float, str]]:
    alerts = [(h.time, h.source_sensor) for h in scenario.hazards if h.time < duration]
    alerts += synthetic_alerts(scenario.network, scenario.network.alert_rate, duration, seed)
    return sorted(alerts)


def run_scenario_network(scenario: Scenario, duration: float, seed: int) -> list[DeliveryRecord]:
    """Network run under the situation flags of a constant-speed cruise."""
    log = cruise(scenario, duration)
    return run_network(scenario.network, log.timeline, network_alerts(scenario, duration, seed), duration, seed)


@dataclass
class EndToEndResult:
    hazard_time: float
    detection_latency: float
    command_latency: float
    brake_onset_time: float
    stopping_distance_from_hazard: float
    mode: BrakingMode
    stability: StabilityReport
    network_metrics: dict
    hazard_position: float = 0.0
    onset_position: float = 0.0
    injected_delay: float = 0.0
    stopped: bool = True
    overrun: float = 0.0
    diagnosis: Optional[DiagnosisReport] = None
    onset_flags: frozenset = frozenset()
    position_estimate: Optional[PositionEstimate] = None
    stop: Optional[StopResult] = field(default=None, repr=False)
    records: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        st = self.stability
        est = self.position_estimate
        return {
            "hazard_time": self.hazard_time,
            "hazard_position": self.hazard_position,
            "detection_latency": self.detection_latency,
            "command_latency": self.command_latency,
            "injected_delay": self.injected_delay,
            "brake_onset_time": self.brake_onset_time,
            "onset_position": self.onset_position,
            "mode": self.mode.value,
            "stopping_distance_from_hazard": self.stopping_distance_from_hazard,
            "braking_distance": self.stop.distance if self.stop else None,
            "braking_duration": self.stop.duration if self.stop else None,
            "peak_jerk": self.stop.peak_jerk if self.stop else None,
            "regenerated_energy": self.stop.regenerated_energy if self.stop else None,
            "stopped": self.stopped,
            "overrun": self.overrun,
            "onset_flags": flags_str(self.onset_flags),
            "position_estimate": None if est is None else {
                "chainage": est.chainage, "uncertainty": est.uncertainty,
                "last_tag_chainage": est.last_tag_chainage, "time": est.time},
            "stability": {"lateral_accel": st.lateral_accel, "effective_limit": st.effective_limit,
                          "margin": st.margin, "stable": st.stable, "spoiler_moment": st.spoiler_moment},
            "diagnosis": None if self.diagnosis is None else self.diagnosis.to_dict(),
            "network_metrics": self.network_metrics,
        }


def stop_controller(scenario: Scenario, mode: BrakingMode, brakes=None):
    train = scenario.train
    brakes = train.brakes if brakes is None else brakes
    if mode is BrakingMode.EMERGENCY:
        return full_apply(brakes)
    return BlendingController(brakes, train.mass, mode, weights=train.blend_weights,
                              service_decel=train.service_decel, jerk_max=train.jerk_max,
                              timestep=scenario.timestep, air_density=scenario.air_density,
                              lam=train.blend_lambda)


def run_end_to_end(scenario: Scenario, *, extra_delay: float = 0.0, seed: Optional[int] = None) -> EndToEndResult:
    """Hazard detection to standstill.

    The earliest hazard triggers the run.  Its alert crosses the network as
    a class-0 message; braking starts once it reaches the gateway and has
    passed gateway egress (plus ``extra_delay``, an injected network delay).
    The stopping distance is measured from where the train was when the
    hazard occurred.  A stop beyond the track end is reported as overrun.

    Raises:
        DiagnosisError: a sensor failed the startup self-diagnosis.
        RunError: no hazard, no seed, or the alert was lost.
    """
    if extra_delay < 0:
        raise ValueError("extra_delay must be >= 0")
    seed = scenario.seed if seed is None else seed
    if seed is None:
        raise RunError("no seed: set sim.seed in the scenario or pass one explicitly")
    report = diagnose(scenario)
    if not report.passed:
        raise DiagnosisError(f"self-diagnosis failed, silent sensors: {', '.join(report.silent_sensors)}", report)
    if not scenario.hazards:
        raise RunError("scenario has no hazard to react to")
    hazard = scenario.hazards[0]
    net = scenario.network
    track, train = scenario.track, scenario.train
    v0 = scenario.initial_speed

    duration = hazard.time + net.superframe.length
    pre = cruise(scenario, duration)
    alerts = [(h.time, h.source_sensor) for h in scenario.hazards if h.time < duration]
    alerts += [a for a in synthetic_alerts(net, net.alert_rate, duration, seed)]
    records = run_network(net, pre.timeline, sorted(alerts), duration, seed)
    alert = next((r for r in records if r.priority_class == 0 and r.sensor == hazard.source_sensor
                  and r.created_at == hazard.time), None)
    if alert is None or alert.dropped:
        raise RunError("hazard alert was not delivered")
    detection = alert.delivered_at - hazard.time
    onset = alert.delivered_at + net.egress_delay + extra_delay

    log = cruise(scenario, onset)
    hazard_pos = v0 * hazard.time
    onset_pos = v0 * onset
    onset_flags = log.timeline(onset)
    mode = select_mode(hazard.severity, BrakingMode.COAST)
    stop = integrate_stop(train, train.brakes, stop_controller(scenario, mode), track, v0,
                          timestep=scenario.timestep, s0=onset_pos, air_density=scenario.air_density,
                          stop_at_track_end=False)
    s_stop = stop.end_position
    stability = cornering_stability(train, v0, radius_at(track, _clip(track, onset_pos)),
                                    train.side_spoiler_down_force, train.side_spoiler_lateral_force)
    overrun = max(0.0, s_stop - track.total_length)
    return EndToEndResult(
        hazard_time=hazard.time,
        detection_latency=detection,
        command_latency=net.egress_delay,
        brake_onset_time=onset,
        stopping_distance_from_hazard=s_stop - hazard_pos,
        mode=mode,
        stability=stability,
        network_metrics=metrics_by_class(records),
        hazard_position=hazard_pos,
        onset_position=onset_pos,
        injected_delay=extra_delay,
        stopped=stop.stopped and overrun == 0.0,
        overrun=overrun,
        diagnosis=report,
        onset_flags=onset_flags,
        position_estimate=log.estimate,
        stop=stop,
        records=records,
    )


# ---------------------------------------------------------------------------
# braking curve

BRAKE_CONFIGS = {
    "friction": (BrakeKind.FRICTION,),
    "friction+spoiler": (BrakeKind.FRICTION, BrakeKind.SPOILER),
    "all": tuple(BrakeKind),
}


@dataclass(frozen=True)
class CurveRow:
    config: str
    speed: float
    distance: float
    duration: float
    stopped: bool


def brake_configs(scenario: Scenario) -> dict:
    """Brake subsets (full application) present on the train, keyed by configuration name."""
    kinds = {b.kind for b in scenario.train.brakes if b.available}
    out = {}
    for name, wanted in BRAKE_CONFIGS.items():
        subset = tuple(b for b in scenario.train.brakes if b.kind in wanted)
        if name != "all" and not set(wanted) <= kinds:
            continue
        if name == "all" and set(b.kind for b in subset) == {BrakeKind.FRICTION}:
            continue  # identical to "friction"
        out[name] = subset
    return out


def braking_curve(scenario: Scenario, speeds: Sequence[float], timestep: Optional[float] = None) -> list[CurveRow]:
    """Stopping distance from each initial speed for every brake configuration, full application."""
    if len(speeds) == 0:
        raise ValueError("speed grid must be non-empty")
    dt = scenario.timestep if timestep is None else timestep
    rows = []
    for name, brakes in brake_configs(scenario).items():
        for v in speeds:
            res = integrate_stop(scenario.train, brakes, full_apply(brakes), scenario.track, v, timestep=dt,
                                 air_density=scenario.air_density, stop_at_track_end=False)
            rows.append(CurveRow(name, float(v), res.distance, res.duration, res.stopped))
    return rows


CURVE_HEADER = ["config", "speed", "speed_kmh", "distance", "duration", "stopped"]


def curve_to_csv(rows: Sequence[CurveRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for r in rows:
        w.writerow([r.config, repr(r.speed), repr(r.speed * 3.6), repr(r.distance), repr(r.duration), int(r.stopped)])
    return buf.getvalue()
