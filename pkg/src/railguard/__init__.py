"""Deterministic co-simulation of train braking and the on-board sensor network."""

from .blending import (
    AllocationResult,
    BlendingController,
    BlendWeights,
    BrakingMode,
    allocate,
    effectiveness_ranking,
    jerk_limit,
    select_mode,
)
from .brakes import (
    BrakeKind,
    BrakeModel,
    StabilityReport,
    StopResult,
    brake_force,
    calibrated_friction,
    cornering_stability,
    default_brakes,
    ecb_force,
    friction_force,
    integrate_stop,
    make_brake,
    regen_force,
    spoiler_drag_force,
)
from .common import HazardKind, Severity, Situation
from .netsim import (
    DeliveryRecord,
    NetworkConfig,
    SensorKind,
    SensorSpec,
    latency_metrics,
    priority_of,
    route_of,
    run_network,
    sampling_interval,
)
from .pipeline import EndToEndResult, braking_curve, run_end_to_end
from .positioning import PositionEstimate, classify_situation, self_diagnosis, update_position
from .scenario import HazardEvent, Scenario, TrainConfig, dump_scenario, load_scenario
from .spoiler import SpoilerDesign, SpoilerType, cd_of, evaluate_design, pareto_sweep
from .track import INFINITE, TrackProfile, TrackSegment, curvature_at, segment_at

__version__ = "0.1.0"
