import numpy as np
import pytest

from pvbatt.dispatch import SystemConfig
from pvbatt.profiles import generate_fleet, generate_pv
from pvbatt.sweep import SweepSpec, run_sweep

_ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = {}


@pytest.fixture
def report(request):
    """Record one acceptance line: report(number, passed, detail)."""
    store = request.config.stash[_ACCEPTANCE_KEY]

    def _record(number, passed, detail=""):
        store[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        passed, detail = store[number]
        terminalreporter.write_line(
            f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def pv_norm():
    return generate_pv(seed=0)


@pytest.fixture(scope="session")
def fleet():
    return generate_fleet(10, seed=7)


@pytest.fixture(scope="session")
def fleet_cells(fleet, pv_norm):
    """Cost-objective sweep of the 10-property fleet, all three scenarios."""
    spec = SweepSpec(objectives=("cost",))
    return run_sweep(fleet, pv_norm, spec, SystemConfig())
