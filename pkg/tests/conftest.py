import numpy as np
import pytest

from vppcvar.cost_surface import build_surface
from vppcvar.data_io import generate_synthetic
from vppcvar.merit_dispatch import ResourceFleet, reference_fleet


@pytest.fixture(scope="session")
def fleet():
    return reference_fleet()


@pytest.fixture(scope="session")
def surface(fleet):
    return build_surface(fleet)


@pytest.fixture(scope="session")
def symmetric_fleet():
    """RT deficit and surplus prices symmetric around the DA cost range."""
    return ResourceFleet.from_unsorted([20.0], [200.0], [40.0], [100.0], [0.0], [100.0])


@pytest.fixture(scope="session")
def small_data(fleet):
    """Twelve synthetic days of 24 slots."""
    return generate_synthetic(11, 12, 24, fleet)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Print one PASS/FAIL line per acceptance criterion that ran."""
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
