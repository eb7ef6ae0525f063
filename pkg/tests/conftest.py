import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from heatcontrol.fields import grid_points

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

CONFIG_DIR = __import__("pathlib").Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def sine_grid(k, n_points=1025):
    return np.sin(k * np.pi * grid_points(n_points))


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
