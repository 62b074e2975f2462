import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from railguard.brakes import BrakeKind, make_brake
from railguard.common import HazardKind, Severity
from railguard.netsim import NetMode, NetworkConfig, SensorKind, SensorSpec
from railguard.scenario import (
    HazardEvent,
    Scenario,
    ScenarioParseError,
    ScenarioValidationError,
    TrainConfig,
    dump_scenario,
    load_scenario,
)
from railguard.track import (
    INFINITE,
    TrackProfile,
    TrackRangeError,
    TrackSegment,
    curvature_at,
    segment_at,
)

MINIMAL = """
[sim]
initial_speed = 50.0

[[track.segments]]
length = 1000.0
"""


def two_km():
    return TrackProfile((TrackSegment(1000.0), TrackSegment(1000.0, radius=4000.0)))


# --- track ------------------------------------------------------------------

def test_segment_at_start():
    assert segment_at(two_km(), 0.0) == (0, 0.0)


def test_segment_at_joint_belongs_to_later_segment():
    assert segment_at(two_km(), 1000.0) == (1, 0.0)


def test_segment_at_track_end_is_last_segment_end():
    assert segment_at(two_km(), 2000.0) == (1, 1000.0)


@pytest.mark.parametrize("s", [-1.0, 2001.0])
def test_segment_at_out_of_range(s):
    with pytest.raises(TrackRangeError):
        segment_at(two_km(), s)


def test_curvature():
    tr = two_km()
    assert curvature_at(tr, 500.0) == 0.0
    assert curvature_at(tr, 1500.0) == pytest.approx(0.00025)
    assert curvature_at(tr, 1000.0) == pytest.approx(0.00025)


@pytest.mark.parametrize("kwargs, message", [
    (dict(length=0.0), "length > 0"),
    (dict(length=10.0, radius=50.0), "radius"),
    (dict(length=10.0, grade=0.06), "grade"),
    (dict(length=10.0, tag_positions=(5.0, 5.0)), "strictly increasing"),
    (dict(length=10.0, tag_positions=(10.0,)), "[0, length)"),
])
def test_segment_invariants(kwargs, message):
    with pytest.raises(ValueError, match=message.replace("[", r"\[").replace(")", r"\)")):
        TrackSegment(**kwargs)


segments = st.lists(
    st.builds(TrackSegment,
              length=st.floats(1.0, 5000.0),
              radius=st.one_of(st.just(INFINITE), st.floats(100.0, 1e5)),
              grade=st.floats(-0.05, 0.05)),
    min_size=1, max_size=8)


@given(segments, st.floats(0.0, 1.0))
def test_segment_at_property(segs, frac):
    tr = TrackProfile(tuple(segs))
    s = frac * tr.total_length
    i, off = segment_at(tr, s)
    assert 0 <= i < len(segs)
    if s == tr.total_length:
        assert i == len(segs) - 1 and off == segs[-1].length
    else:
        assert 0 <= off < segs[i].length
    assert curvature_at(tr, s) == segs[i].curvature


# --- load / dump -------------------------------------------------------------

def test_minimal_document_takes_defaults():
    sc = load_scenario(MINIMAL)
    assert sc.train.mass == 400000.0
    assert sc.timestep == 0.01
    assert sc.initial_speed == 50.0
    assert sc.train.n_vehicles == 8
    assert [b.kind for b in sc.train.brakes] == list(BrakeKind)
    assert len(sc.network.sensors) == 6 * 8


def test_kmh_suffix():
    sc = load_scenario(MINIMAL.replace("50.0", '"300 kmh"'))
    assert sc.initial_speed == pytest.approx(83.3333, abs=1e-4)


def test_zero_length_segment_rejected():
    with pytest.raises(ScenarioValidationError, match="length > 0"):
        load_scenario(MINIMAL.replace("1000.0", "0.0"))


def test_hazards_out_of_order_names_pair():
    doc = MINIMAL + """
[[hazards.events]]
time = 10.0
kind = "FIRE"
severity = "URGENT"
source_sensor = "fire-1"

[[hazards.events]]
time = 5.0
kind = "FIRE"
severity = "URGENT"
source_sensor = "fire-2"
"""
    with pytest.raises(ScenarioValidationError, match=r"hazards\[0\].*hazards\[1\]"):
        load_scenario(doc)


def test_unknown_hazard_sensor_rejected():
    doc = MINIMAL + """
[[hazards.events]]
time = 1.0
kind = "FIRE"
severity = "URGENT"
source_sensor = "nope"
"""
    with pytest.raises(ScenarioValidationError, match="nope"):
        load_scenario(doc)


def test_toml_syntax_error_has_line():
    with pytest.raises(ScenarioParseError, match="line 3"):
        load_scenario("[sim]\ninitial_speed = 1\nbroken = = 2\n")


def test_unknown_key_is_parse_error():
    with pytest.raises(ScenarioParseError, match="train.*bogus"):
        load_scenario(MINIMAL + "\n[train]\nbogus = 1\n")


def test_wrong_type_names_field():
    with pytest.raises(ScenarioParseError, match="train.mass"):
        load_scenario(MINIMAL + '\n[train]\nmass = "heavy"\n')


def test_timestep_bound():
    with pytest.raises(ScenarioValidationError, match="timestep"):
        load_scenario(MINIMAL.replace("[sim]", "[sim]\ntimestep = 0.2"))


def test_missing_initial_speed():
    with pytest.raises(ScenarioParseError, match="initial_speed"):
        load_scenario("[[track.segments]]\nlength = 1.0\n")


def test_brake_override_keeps_kind_defaults():
    sc = load_scenario(MINIMAL + '\n[[train.brakes]]\nkind = "EddyCurrent"\npeak_force = 1000.0\n')
    (b,) = sc.train.brakes
    assert b.peak_force == 1000.0 and b.critical_speed == 15.0 and b.response_time == 0.15


def test_roundtrip_minimal():
    sc = load_scenario(MINIMAL)
    assert load_scenario(dump_scenario(sc)) == sc


def test_roundtrip_shipped(standard_scenario, calibration_scenario):
    for sc in (standard_scenario, calibration_scenario):
        assert load_scenario(dump_scenario(sc)) == sc


finite = dict(allow_nan=False, allow_infinity=False)


@st.composite
def scenarios(draw):
    n_veh = draw(st.integers(1, 4))
    sensors = tuple(
        SensorSpec(f"s{i}", draw(st.sampled_from(list(SensorKind))), draw(st.integers(0, n_veh - 1)),
                   draw(st.floats(0.01, 50.0)), draw(st.dictionaries(
                       st.sampled_from(["CURVED", "HIGH_SPEED", "FIRE"]), st.floats(1.0, 8.0), max_size=2)),
                   response_time=draw(st.one_of(st.just(math.inf), st.floats(0.0, 5.0))))
        for i in range(draw(st.integers(1, 5))))
    times = sorted(draw(st.lists(st.floats(0.0, 100.0), max_size=3)))
    hazards = tuple(HazardEvent(t, draw(st.sampled_from(list(HazardKind))), draw(st.sampled_from(list(Severity))),
                                draw(st.sampled_from([s.id for s in sensors]))) for t in times)
    brakes = tuple(make_brake(k, response_time=draw(st.floats(0.0, 2.0)))
                   for k in draw(st.lists(st.sampled_from(list(BrakeKind)), min_size=1, max_size=4)))
    train = TrainConfig(mass=draw(st.floats(1e4, 1e6)), n_vehicles=n_veh, brakes=brakes,
                        high_speed_threshold=draw(st.floats(1.0, 100.0)))
    net = NetworkConfig(mode=draw(st.sampled_from(list(NetMode))), sensors=sensors,
                        gateways=draw(st.sampled_from([1, 2])), link_delay=draw(st.floats(0.0, 0.01)))
    return Scenario(TrackProfile(tuple(draw(segments))), train, draw(st.floats(0.0, 120.0)), hazards, net,
                    draw(st.one_of(st.none(), st.integers(0, 2**32))), draw(st.floats(1e-4, 0.1)),
                    name=draw(st.sampled_from(["", "run-a"])))


@settings(max_examples=60, deadline=None)
@given(scenarios())
def test_roundtrip_property(sc):
    assert load_scenario(dump_scenario(sc)) == sc


def test_readme_example_document_loads():
    import re
    from conftest import ROOT

    text = (ROOT / "README.md").read_text()
    doc = re.search(r"```toml\n(.*?)```", text, re.S).group(1)
    sc = load_scenario(doc)
    assert sc.initial_speed == pytest.approx(300 / 3.6)
    assert sc.hazards[0].source_sensor == "tilt-1"
    assert load_scenario(dump_scenario(sc)) == sc
