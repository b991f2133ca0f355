import numpy as np
import pytest

from uav_backhaul.geometry import RadioParams, ScenarioConfig, generate_scenario


@pytest.fixture
def radio():
    return RadioParams()


@pytest.fixture
def paper_config():
    return ScenarioConfig()


@pytest.fixture
def small_scenario():
    cfg = ScenarioConfig(num_users=3, num_uavs=2, num_rbs=3)
    return generate_scenario(cfg, 7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
