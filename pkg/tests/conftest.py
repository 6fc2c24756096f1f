import numpy as np
import pytest
from hypothesis import settings, HealthCheck

from dqdscatter.bound_states import build_channel_basis
from dqdscatter.device import DeviceSpec, GridSpec

# deterministic hypothesis runs; solver-backed properties get few examples
settings.register_profile(
    "ci", derandomize=True, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")

_CONFIG = None


def pytest_configure(config):
    global _CONFIG
    _CONFIG = config


def pytest_runtest_logreport(report):
    """Echo acceptance verdict lines past the capture, pass or fail."""
    if report.when != "call" or _CONFIG is None:
        return
    reporter = _CONFIG.pluginmanager.get_plugin("terminalreporter")
    if reporter is None:
        return
    for line in getattr(report, "capstdout", "").splitlines():
        if line.startswith("[PASS]") or line.startswith("[FAIL]"):
            reporter.write_line(line)


@pytest.fixture(scope="session")
def device():
    return DeviceSpec()


@pytest.fixture(scope="session")
def free_device():
    # leads only: no wells, no Coulomb
    return DeviceSpec(well_depth=0.0, coulomb_on=False)


@pytest.fixture(scope="session")
def grid15():
    return GridSpec(points=15)


@pytest.fixture(scope="session")
def grid21():
    return GridSpec(points=21)


@pytest.fixture(scope="session")
def grid41():
    return GridSpec(points=41)


@pytest.fixture(scope="session")
def basis21(device, grid21):
    return build_channel_basis(device, grid21)


@pytest.fixture(scope="session")
def basis41(device, grid41):
    return build_channel_basis(device, grid41)


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)
