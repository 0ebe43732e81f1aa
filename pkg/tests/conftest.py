import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from quadinv.coeffs import preset  # noqa: E402
from quadinv.grid_ops import Grid, WaveFunction  # noqa: E402

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def grid():
    return Grid(-12.0, 12.0, 512)


@pytest.fixture
def sho():
    return preset("sho")


@pytest.fixture
def ground(grid):
    return WaveFunction(grid, np.pi ** -0.25 * np.exp(-grid.x ** 2 / 2))


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE, key=str):
            terminalreporter.write_line(ACCEPTANCE[number])
