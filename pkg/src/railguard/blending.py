"""Braking-mode selection and allocation of a braking demand across brakes."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .brakes import KIND_ORDER, BrakeModel, TrainState, brake_force
from .common import AIR_DENSITY, Severity

LAMBDA = 0.2
JERK_MAX = 0.75  # m/s^3
SERVICE_DECEL = 1.0  # m/s^2, demand in NORMAL mode
BISECTION_TOL = 1e-4  # N, per brake; the greedy fill leaves at most one brake partial


class BrakingMode(str, Enum):
    COAST = "COAST"
    NORMAL = "NORMAL"
    EMERGENCY = "EMERGENCY"


@dataclass(frozen=True)
class BlendWeights:
    w_response: float = 1.0 / 3.0
    w_efficiency: float = 1.0 / 3.0
    w_comfort: float = 1.0 / 3.0

    def __post_init__(self):
        ws = (self.w_response, self.w_efficiency, self.w_comfort)
        if any(w < 0 for w in ws):
            raise ValueError(f"blend weights must be non-negative, got {ws}")
        if abs(sum(ws) - 1.0) > 1e-9:
            raise ValueError(f"blend weights must sum to 1, got {sum(ws)!r}")


@dataclass(frozen=True)
class AllocationResult:
    command: tuple[float, ...]
    achieved_force: float
    shortfall: float
    ranking: tuple[int, ...]


def select_mode(severity: Optional[Severity], current_mode: BrakingMode = BrakingMode.COAST) -> BrakingMode:
    """Next braking mode. EMERGENCY latches for the rest of the run."""
    if current_mode is BrakingMode.EMERGENCY:
        return BrakingMode.EMERGENCY
    if severity is None:
        return current_mode
    severity = Severity(severity)
    if severity is Severity.EMERGENCY:
        return BrakingMode.EMERGENCY
    return BrakingMode.NORMAL


def effectiveness_ranking(brakes: Sequence[BrakeModel], speed: float, mass: float,
                          air_density: float = AIR_DENSITY) -> list[int]:
    """Brake indices by full-command force at ``speed``, strongest first.

    Ties go by brake kind (Friction, Regenerative, EddyCurrent, Spoiler),
    then by position in the list.
    """
    if len(brakes) == 0:
        raise ValueError("no brakes to rank")
    if speed < 0:
        raise ValueError("speed must be >= 0")
    forces = [brake_force(b, 1.0, speed, mass, air_density) for b in brakes]
    return sorted(range(len(brakes)), key=lambda i: (-forces[i], KIND_ORDER[brakes[i].kind], i))


def blend_scores(brakes: Sequence[BrakeModel], speed: float, weights: BlendWeights, mass: float,
                 air_density: float = AIR_DENSITY, lam: float = LAMBDA) -> list[float]:
    """Scalarized preference per brake.

    Force and response time are normalized by their maxima over the brake
    set so all terms live on [0, 1]; comfort and efficiency already do.
    """
    forces = [brake_force(b, 1.0, speed, mass, air_density) for b in brakes]
    f_max = max(forces) or 1.0
    tau_max = max(b.response_time for b in brakes) or 1.0
    return [
        f / f_max - lam * (weights.w_response * b.response_time / tau_max
                           + weights.w_comfort * b.comfort
                           - weights.w_efficiency * b.efficiency)
        for f, b in zip(forces, brakes)
    ]


def _solve_u(model: BrakeModel, target: float, speed: float, mass: float, air_density: float) -> float:
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = brake_force(model, mid, speed, mass, air_density)
        if abs(f - target) <= BISECTION_TOL:
            return mid
        if f < target:
            lo = mid
        else:
            hi = mid
    return hi


def allocate(brakes: Sequence[BrakeModel], speed: float, demand_force: float, weights: BlendWeights,
             mode: BrakingMode, *, mass: float, air_density: float = AIR_DENSITY,
             lam: float = LAMBDA) -> AllocationResult:
    """Split ``demand_force`` across the available brakes.

    EMERGENCY applies every available brake fully.  NORMAL fills brakes in
    descending score order, each up to the command that covers what is
    still missing.  COAST commands nothing.
    """
    if demand_force < 0:
        raise ValueError(f"demand_force must be >= 0, got {demand_force}")
    n = len(brakes)
    avail = [i for i, b in enumerate(brakes) if b.available]
    cmd = [0.0] * n
    if mode is BrakingMode.COAST:
        return AllocationResult(tuple(cmd), 0.0, 0.0, ())

    if mode is BrakingMode.EMERGENCY:
        for i in avail:
            cmd[i] = 1.0
        order = [i for i in effectiveness_ranking(brakes, speed, mass, air_density) if brakes[i].available]
        achieved = sum(brake_force(brakes[i], 1.0, speed, mass, air_density) for i in avail)
        return AllocationResult(tuple(cmd), achieved, max(0.0, demand_force - achieved), tuple(order))

    scores = blend_scores(brakes, speed, weights, mass, air_density, lam)
    order = sorted(avail, key=lambda i: (-scores[i], i))
    remaining = demand_force
    used = []
    for i in order:
        if remaining <= BISECTION_TOL:
            break
        f_full = brake_force(brakes[i], 1.0, speed, mass, air_density)
        if f_full <= remaining:
            cmd[i] = 1.0
            remaining -= f_full
        else:
            cmd[i] = _solve_u(brakes[i], remaining, speed, mass, air_density)
            remaining = 0.0
        used.append(i)
    achieved = sum(brake_force(brakes[i], cmd[i], speed, mass, air_density) for i in avail)
    saturated = all(cmd[i] == 1.0 for i in avail)
    shortfall = max(0.0, demand_force - achieved) if saturated else 0.0
    return AllocationResult(tuple(cmd), achieved, shortfall, tuple(used))


def jerk_limit(prev_total_force: float, target_total_force: float, dt: float, mass: float,
               jerk_max: float = JERK_MAX, mode: BrakingMode = BrakingMode.NORMAL) -> float:
    if not dt > 0 or not jerk_max > 0:
        raise ValueError("dt and jerk_max must be > 0")
    if mode is BrakingMode.EMERGENCY:
        return target_total_force
    step = mass * jerk_max * dt
    delta = target_total_force - prev_total_force
    if abs(delta) <= step:
        return target_total_force
    return prev_total_force + (step if delta > 0 else -step)


class BlendingController:
    """Stop controller driving :func:`~railguard.brakes.integrate_stop`.

    In NORMAL mode the total braking force ramps toward ``service_decel * mass``
    under the jerk limit and is split by :func:`allocate`; EMERGENCY applies
    everything at once.
    """

    def __init__(self, brakes: Sequence[BrakeModel], mass: float, mode: BrakingMode, *,
                 weights: BlendWeights = BlendWeights(), service_decel: float = SERVICE_DECEL,
                 jerk_max: float = JERK_MAX, timestep: float = 0.01, air_density: float = AIR_DENSITY,
                 lam: float = LAMBDA):
        self.brakes = tuple(brakes)
        self.mass = mass
        self.mode = mode
        self.weights = weights
        self.demand = service_decel * mass
        self.jerk_max = jerk_max
        self.timestep = timestep
        self.air_density = air_density
        self.lam = lam
        self.prev_total = 0.0
        self.last_t: Optional[float] = None
        self.allocations: list[AllocationResult] = []

    def __call__(self, t: float, state: TrainState) -> tuple[float, ...]:
        dt = t - self.last_t if self.last_t is not None and t > self.last_t else self.timestep
        self.last_t = t
        target = jerk_limit(self.prev_total, self.demand, dt, self.mass, self.jerk_max, self.mode)
        self.prev_total = target
        res = allocate(self.brakes, state.speed, target, self.weights, self.mode, mass=self.mass,
                       air_density=self.air_density, lam=self.lam)
        self.allocations.append(res)
        return res.command
