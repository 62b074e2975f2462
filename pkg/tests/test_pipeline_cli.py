import csv
import json
from dataclasses import replace

import pytest

from railguard.cli import UsageError, main, parse_range, parse_speeds
from railguard.common import Situation
from railguard.netsim import SensorKind, SensorSpec
from railguard.pipeline import braking_curve, cruise, diagnose, run_end_to_end
from railguard.positioning import DiagnosisError
from railguard.scenario import load_scenario

from conftest import SCENARIOS

CAL = str(SCENARIOS / "calibration.toml")
STD = str(SCENARIOS / "standard.toml")


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


# --- grids -------------------------------------------------------------------

def test_parse_range_inclusive():
    assert parse_range("0:90:10") == [float(a) for a in range(0, 91, 10)]
    assert len(parse_range("0:90:10")) == 10
    assert parse_range("1,2.5") == [1.0, 2.5]


@pytest.mark.parametrize("text", ["", "0:90", "5:1:1", "0:10:0", "a,b"])
def test_parse_range_rejects(text):
    with pytest.raises(UsageError):
        parse_range(text)


def test_parse_speeds():
    assert parse_speeds("36kmh,10") == pytest.approx([10.0, 10.0])
    with pytest.raises(UsageError):
        parse_speeds(" , ")


# --- pipeline ------------------------------------------------------------------

def test_cruise_flags_follow_track(standard_scenario):
    log = cruise(standard_scenario, 30.0)
    # 300 km/h throughout; the curve spans 1200..2000 m
    assert Situation.HIGH_SPEED in log.timeline(1.0)
    assert Situation.CURVED in log.timeline(1500.0 / standard_scenario.initial_speed)
    assert Situation.CURVED not in log.timeline(2100.0 / standard_scenario.initial_speed)


def test_cruise_position_reset_by_tags(standard_scenario):
    log = cruise(standard_scenario, 10.0)
    est = log.estimate
    assert est.chainage == pytest.approx(standard_scenario.initial_speed * 10.0, rel=1e-9)
    assert est.uncertainty <= 0.01 * (est.chainage - est.last_tag_chainage) + 1e-9


def test_braking_curve_configs(standard_scenario):
    rows = braking_curve(standard_scenario, [20.0, 40.0])
    by = {(r.config, r.speed): r.distance for r in rows}
    assert {r.config for r in rows} == {"friction", "friction+spoiler", "all"}
    assert by[("all", 40.0)] < by[("friction+spoiler", 40.0)] <= by[("friction", 40.0)]


def test_end_to_end_standard(standard_scenario):
    res = run_end_to_end(standard_scenario)
    assert res.stopped and res.mode.value == "EMERGENCY"
    assert 0 < res.detection_latency < 0.03
    assert res.brake_onset_time == pytest.approx(res.hazard_time + res.detection_latency + 0.005)
    assert res.stopping_distance_from_hazard > res.stop.distance


def test_silent_sensor_fails_diagnosis(standard_scenario):
    net = standard_scenario.network
    sensors = (*net.sensors[:-1], replace(net.sensors[-1], response_time=float("inf")))
    sc = replace(standard_scenario, network=replace(net, sensors=sensors))
    assert not diagnose(sc).passed
    with pytest.raises(DiagnosisError):
        run_end_to_end(sc)


def test_short_track_overrun_is_reported(calibration_scenario):
    sc = load_scenario((SCENARIOS / "calibration.toml").read_text().replace("12000.0", "2000.0"))
    res = run_end_to_end(sc)
    assert not res.stopped
    assert res.overrun > 0


# --- CLI -----------------------------------------------------------------------

def test_cli_braking_curve(tmp_path, capsys):
    assert run(tmp_path, "braking-curve", "--scenario", CAL, "--speeds", "300kmh") == 0
    rows = list(csv.DictReader(open(tmp_path / "calibration" / "braking_curve.csv")))
    assert len(rows) == 1 and rows[0]["config"] == "friction"
    assert float(rows[0]["distance"]) == pytest.approx(2816, rel=5e-3)


def test_cli_empty_speed_grid(tmp_path):
    assert run(tmp_path, "braking-curve", "--scenario", CAL, "--speeds", "") != 0


def test_cli_netsim_json(tmp_path):
    assert run(tmp_path, "netsim", "--scenario", STD, "--duration", "3", "--name", "n") == 0
    doc = json.loads((tmp_path / "n" / "result.json").read_text())
    assert list(doc["metrics"]) == ["0", "1", "2"]
    assert doc["seed"] == 7
    assert (tmp_path / "n" / "net_records.csv").exists()


def test_cli_end_to_end_outputs(tmp_path):
    assert run(tmp_path, "end-to-end", "--scenario", CAL, "--delay", "0.5") == 0
    doc = json.loads((tmp_path / "calibration" / "result.json").read_text())
    assert doc["injected_delay"] == 0.5
    assert (tmp_path / "calibration" / "trajectory.csv").exists()


def test_cli_sweep_single_design(tmp_path):
    argv = ["spoiler-sweep", "--scenario", CAL, "--types", "micro", "--angles", "30", "--areas", "2"]
    assert run(tmp_path, *argv) == 0
    rows = list(csv.DictReader(open(tmp_path / "calibration" / "sweep.csv")))
    assert len(rows) == 1 and rows[0]["pareto"] == "1"


def test_cli_sweep_default_grid(tmp_path):
    assert run(tmp_path, "spoiler-sweep", "--scenario", CAL) == 0
    rows = list(csv.DictReader(open(tmp_path / "calibration" / "sweep.csv")))
    assert len(rows) == 90
    assert {r["type"] for r in rows if r["pareto"] == "1"} == {"MICRO_GEOMETRIC", "COUNTER_FLOW"}


@pytest.mark.parametrize("argv", [
    ["spoiler-sweep", "--scenario", CAL, "--types", "flaps"],
    ["spoiler-sweep", "--scenario", CAL, "--angles", "9:0:1"],
    ["netsim", "--scenario", CAL, "--duration", "0"],
    ["braking-curve", "--scenario", "/nonexistent.toml"],
    ["bogus-command"],
    [],
])
def test_cli_usage_errors(tmp_path, argv):
    assert main([*argv, "--out", str(tmp_path)] if argv else argv) == 2


def test_cli_malformed_scenario(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[sim\ninitial_speed = 1\n")
    assert run(tmp_path, "braking-curve", "--scenario", str(bad)) == 2


def test_cli_invalid_scenario_is_failure(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[sim]\ninitial_speed = 10.0\n[[track.segments]]\nlength = -5.0\n")
    assert run(tmp_path, "braking-curve", "--scenario", str(bad)) == 1


def test_cli_missing_seed(tmp_path):
    doc = tmp_path / "noseed.toml"
    doc.write_text("\n".join(line for line in open(CAL).read().splitlines() if not line.startswith("seed")))
    assert run(tmp_path, "netsim", "--scenario", str(doc), "--duration", "1") == 2
    assert run(tmp_path, "netsim", "--scenario", str(doc), "--duration", "1", "--seed", "3") == 0


def test_cli_seed_changes_network_output(tmp_path):
    outs = []
    for seed in ("1", "2"):
        assert run(tmp_path, "netsim", "--scenario", STD, "--duration", "2", "--seed", seed, "--name", seed) == 0
        outs.append((tmp_path / seed / "net_records.csv").read_bytes())
    assert outs[0] != outs[1]


def test_sensor_used_by_hazard_must_exist():
    text = (SCENARIOS / "calibration.toml").read_text().replace('source_sensor = "obstacle-1"',
                                                                'source_sensor = "ghost"')
    with pytest.raises(Exception, match="ghost"):
        load_scenario(text)


def test_local_only_sensor_stops_at_cluster_head(standard_scenario):
    from railguard.netsim import route_of
    s = SensorSpec("act-1", SensorKind.TILT, 0, 1.0, local_only=True)
    net = replace(standard_scenario.network, sensors=(*standard_scenario.network.sensors, s))
    assert route_of(net, s, 1) == ["ch-1"]
