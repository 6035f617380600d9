import numpy as np
import pytest

from sparsecsm.scenario import ArrayGeometry, FocusGrid, Scenario, Source, vogel_spiral


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def small_scenario(sources=((0.0, 0.0, 0.3, 1.0),), n_mics=8, measurement_time=0.05, **kw):
    """Cheap scenario on a 5x5 grid for fast pipeline tests."""
    geo = ArrayGeometry(vogel_spiral(n_mics, radius=0.2))
    grid = FocusGrid(5, 5, 0.05, (-0.1, -0.1, 0.3))
    srcs = tuple(Source((x, y, z), q) for x, y, z, q in sources)
    return Scenario(geo, grid, srcs, measurement_time=measurement_time, name="small", **kw)


ACCEPTANCE_LINES = {}


def record_criterion(number, title, passed, detail=""):
    """Store a one-line verdict for the acceptance summary."""
    ACCEPTANCE_LINES[number] = f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}: {detail}"
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
