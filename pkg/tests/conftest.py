import warnings

import pytest

from nvcat import units
from nvcat.grid import GridSpec
from nvcat.interference import DEFAULT_GRID, pattern
from nvcat.protocols import cat_pipeline


@pytest.fixture(scope="session")
def fig5():
    return units.scenario_fig5()


@pytest.fixture(scope="session")
def fig5_cats(fig5):
    """Cat pipelines from vacuum, both parities, on the default interference grid."""
    return {s: cat_pipeline(0, fig5, s, grid=DEFAULT_GRID) for s in (1, -1)}


@pytest.fixture(scope="session")
def fig5_patterns(fig5, fig5_cats):
    out = {}
    for s, res in fig5_cats.items():
        out[s] = pattern(res.extras["wavefunction"], fig5.flight_time, res.summary["D_m"])
    return out


@pytest.fixture(scope="session")
def fig3_grid():
    return GridSpec(2048, 32e-9)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda l: int(l.split()[1])):
        terminalreporter.write_line(line)
