"""Enumerations and constants shared across the simulator."""

from __future__ import annotations

from enum import Enum

G = 9.81  # m/s^2
AIR_DENSITY = 1.225  # kg/m^3, sea level
KMH = 1.0 / 3.6  # km/h -> m/s


class Situation(str, Enum):
    NORMAL = "NORMAL"
    CURVED = "CURVED"
    HIGH_SPEED = "HIGH_SPEED"
    WHEEL_FAULT = "WHEEL_FAULT"
    FIRE = "FIRE"
    PANTOGRAPH_RISK = "PANTOGRAPH_RISK"


class HazardKind(str, Enum):
    WHEEL_FAULT = "WHEEL_FAULT"
    FIRE = "FIRE"
    OBSTACLE = "OBSTACLE"
    PANTOGRAPH_FAULT = "PANTOGRAPH_FAULT"


class Severity(str, Enum):
    NORMAL = "NORMAL"
    URGENT = "URGENT"
    EMERGENCY = "EMERGENCY"


class RailguardError(Exception):
    """Base class for errors raised by this package."""


def parse_speed(value) -> float:
    """Convert a speed given as a number (m/s) or a ``"<x> kmh"`` string to m/s."""
    if isinstance(value, bool):
        raise ValueError(f"invalid speed {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip().lower()
    if text.endswith("kmh"):
        return float(text[:-3].strip()) * KMH
    if text.endswith("m/s"):
        return float(text[:-3].strip())
    return float(text)
