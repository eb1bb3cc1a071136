import sys
import numpy as np
import pytest

from hypkde.helgason import SpectralGrid, hf_forward
from hypkde.measures import Grid, base_density


@pytest.fixture(scope="session")
def std_grid():
    return Grid.standard()


@pytest.fixture(scope="session")
def b1():
    return base_density()


@pytest.fixture(scope="session")
def template():
    return SpectralGrid.template()


@pytest.fixture(scope="session")
def b1_hat(b1, template):
    return hf_forward(b1, template)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
