from pathlib import Path

import pytest

import railguard
import railguard.brakes
import railguard.pipeline
from railguard.brakes import calibrated_friction
from railguard.scenario import TrainConfig, load_scenario_file

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
V300 = 300 / 3.6

# acceptance verdict lines, echoed in the terminal summary
VERDICTS: list[str] = []
# (regenerated energy, initial kinetic energy) of every stop integrated in the session
STOP_ENERGY: list[tuple[float, float]] = []

_integrate_stop = railguard.brakes.integrate_stop


def _checked_integrate_stop(train, brakes, controller, track, v0, **kwargs):
    res = _integrate_stop(train, brakes, controller, track, v0, **kwargs)
    ke = 0.5 * train.mass * v0 * v0
    STOP_ENERGY.append((res.regenerated_energy, ke))
    assert res.regenerated_energy <= ke * (1 + 1e-12), "regenerated energy exceeds initial kinetic energy"
    return res


# installed before test modules import it, so every stop in the suite goes through the check
for _mod in (railguard, railguard.brakes, railguard.pipeline):
    _mod.integrate_stop = _checked_integrate_stop


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
    if STOP_ENERGY:
        worst = max(e / ke for e, ke in STOP_ENERGY if ke > 0)
        terminalreporter.write_line(f"energy bound held on all {len(STOP_ENERGY)} stops integrated in this "
                                    f"session (worst regenerated/initial KE = {worst:.3f})")


@pytest.fixture
def train():
    return TrainConfig()


@pytest.fixture
def friction_train():
    return TrainConfig(brakes=(calibrated_friction(),))


@pytest.fixture(scope="session")
def standard_scenario():
    return load_scenario_file(SCENARIOS / "standard.toml")


@pytest.fixture(scope="session")
def calibration_scenario():
    return load_scenario_file(SCENARIOS / "calibration.toml")
