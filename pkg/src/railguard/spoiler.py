"""Parametric spoiler aerodynamics and the multi-objective design sweep.

The coefficient laws are deliberately simple stand-ins (flat plate ``sin^2``
drag, ``sin(2a)`` lift, cubic-in-speed acoustic proxy).  They are not
aerodynamic predictions; they only preserve the orderings the design
trade-off is about:

===============  ==============================  =========  =======
type             drag coefficient                noise k    remark
===============  ==============================  =========  =======
MACRO_GEOMETRIC  cd_max * sin^2(a)               1.0        baseline flap
MICRO_GEOMETRIC  0.3 * cd_max * sin^2(a)         0.4        small, quiet
COUNTER_FLOW     cd_max * (0.5 + 0.5 * sin(a))   0.7        drag at a = 0
===============  ==============================  =========  =======
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .common import AIR_DENSITY

CD_MAX = 1.2
CL_MAX = 0.8
MICRO_DRAG_FACTOR = 0.3


class SpoilerType(str, Enum):
    MACRO_GEOMETRIC = "MACRO_GEOMETRIC"
    MICRO_GEOMETRIC = "MICRO_GEOMETRIC"
    COUNTER_FLOW = "COUNTER_FLOW"


class Placement(str, Enum):
    ROOF = "ROOF"
    SIDE = "SIDE"


NOISE_K = {
    SpoilerType.MACRO_GEOMETRIC: 1.0,
    SpoilerType.MICRO_GEOMETRIC: 0.4,
    SpoilerType.COUNTER_FLOW: 0.7,
}

TYPE_ALIASES = {
    "macro": SpoilerType.MACRO_GEOMETRIC,
    "micro": SpoilerType.MICRO_GEOMETRIC,
    "counter": SpoilerType.COUNTER_FLOW,
    "counter_flow": SpoilerType.COUNTER_FLOW,
    "counter-flow": SpoilerType.COUNTER_FLOW,
}


def spoiler_type(value) -> SpoilerType:
    if isinstance(value, SpoilerType):
        return value
    key = str(value).strip()
    if key.lower() in TYPE_ALIASES:
        return TYPE_ALIASES[key.lower()]
    return SpoilerType(key.upper())


@dataclass(frozen=True)
class SpoilerDesign:
    type: SpoilerType
    angle: float  # degrees
    area: float  # m^2
    placement: Placement = Placement.ROOF
    cd_max: float = CD_MAX

    def __post_init__(self):
        object.__setattr__(self, "type", spoiler_type(self.type))
        object.__setattr__(self, "placement", Placement(self.placement))
        if not self.area > 0:
            raise ValueError(f"area > 0 violated (area={self.area})")
        if not 0.0 <= self.angle <= 90.0:
            raise ValueError(f"angle in [0, 90] violated (angle={self.angle})")


@dataclass(frozen=True)
class ObjectiveVector:
    mean_brake_force: float
    noise_proxy: float
    down_force: float
    lateral_force: float

    def dominance_key(self) -> tuple[float, float, float]:
        """Objectives oriented so that larger is better in every component."""
        return (self.mean_brake_force, -self.noise_proxy, self.down_force)


def drag_coefficient(kind: SpoilerType, angle: float, cd_max: float = CD_MAX) -> float:
    a = math.radians(angle)
    if kind is SpoilerType.MACRO_GEOMETRIC:
        return cd_max * math.sin(a) ** 2
    if kind is SpoilerType.MICRO_GEOMETRIC:
        return MICRO_DRAG_FACTOR * cd_max * math.sin(a) ** 2
    if kind is SpoilerType.COUNTER_FLOW:
        return cd_max * (0.5 + 0.5 * math.sin(a))
    raise ValueError(f"unknown spoiler type {kind!r}")


def cd_of(design: SpoilerDesign) -> float:
    return drag_coefficient(design.type, design.angle, design.cd_max)


def cl_of(design: SpoilerDesign) -> float:
    return CL_MAX * math.sin(2.0 * math.radians(design.angle))


def evaluate_design(design: SpoilerDesign, speeds: Sequence[float], air_density: float = AIR_DENSITY) -> ObjectiveVector:
    """Objective vector of one design averaged over a set of speeds.

    For SIDE placement the lift acts sideways, so the lift-derived force is
    reported as ``lateral_force`` and ``down_force`` is zero.
    """
    v = np.asarray(speeds, dtype=float)
    if v.size == 0:
        raise ValueError("speeds must be non-empty")
    if np.any(v < 0):
        raise ValueError("speeds must be >= 0")
    # sort so that the float sums do not depend on the order the speeds were given in
    v = np.sort(v)
    mean_v2 = float(np.mean(v**2))
    mean_v3 = float(np.mean(v**3))
    q = 0.5 * air_density * design.area
    brake = q * cd_of(design) * mean_v2
    noise = NOISE_K[design.type] * design.area * math.sin(math.radians(design.angle)) * mean_v3 / 1e6
    lift = q * cl_of(design) * mean_v2
    if design.placement is Placement.ROOF:
        down, lateral = lift, 0.0
    else:
        down, lateral = 0.0, lift
    return ObjectiveVector(brake, noise, down, lateral)


def pareto_mask(objectives: Sequence[ObjectiveVector]) -> np.ndarray:
    """Boolean mask of non-dominated entries (maximize brake, minimize noise, maximize down).

    Entries with identical objective vectors do not dominate each other.
    """
    if len(objectives) == 0:
        return np.zeros(0, dtype=bool)
    f = np.array([o.dominance_key() for o in objectives])
    ge = np.all(f[:, None, :] >= f[None, :, :], axis=2)
    gt = np.any(f[:, None, :] > f[None, :, :], axis=2)
    dominated = np.any(ge & gt, axis=0)
    return ~dominated


@dataclass(frozen=True)
class SweepRow:
    design: SpoilerDesign
    objectives: ObjectiveVector
    pareto: bool


def sweep(grid: Sequence[SpoilerDesign], speeds: Sequence[float], air_density: float = AIR_DENSITY) -> list[SweepRow]:
    """Evaluate every grid design and flag the Pareto-optimal ones, in grid order."""
    if len(grid) == 0:
        raise ValueError("design grid must be non-empty")
    objs = [evaluate_design(d, speeds, air_density) for d in grid]
    mask = pareto_mask(objs)
    return [SweepRow(d, o, bool(p)) for d, o, p in zip(grid, objs, mask)]


def pareto_sweep(grid: Sequence[SpoilerDesign], speeds: Sequence[float], air_density: float = AIR_DENSITY) -> list[tuple[SpoilerDesign, ObjectiveVector]]:
    return [(r.design, r.objectives) for r in sweep(grid, speeds, air_density) if r.pareto]


def design_grid(types: Iterable, angles: Iterable[float], areas: Iterable[float],
                placement: Placement = Placement.ROOF) -> list[SpoilerDesign]:
    """Cartesian grid ordered type-major, then angle, then area."""
    angles, areas = list(angles), list(areas)
    return [
        SpoilerDesign(spoiler_type(t), float(a), float(ar), placement)
        for t in types
        for a in angles
        for ar in areas
    ]


SWEEP_HEADER = ["type", "angle_deg", "area", "brake_force", "noise", "down_force", "lateral_force", "pareto"]


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        o = r.objectives
        w.writerow([r.design.type.value, repr(r.design.angle), repr(r.design.area),
                    repr(o.mean_brake_force), repr(o.noise_proxy), repr(o.down_force),
                    repr(o.lateral_force), int(r.pareto)])
    return buf.getvalue()
