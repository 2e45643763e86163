import numpy as np
import pytest

from phase_minmax import competitor as comp
from phase_minmax.energy import EnergyParams
from phase_minmax.manifold import SymmetricSphereGrid
from phase_minmax.minmax import run_minmax
from phase_minmax.tube import Interface


@pytest.fixture(scope="session")
def s2_800():
    return SymmetricSphereGrid(2, 800)


@pytest.fixture(scope="session")
def minmax_005(s2_800):
    """Min-max run at eps = 0.05, lambda = 1 on S^2 (K = 800, P = 33)."""
    return run_minmax(s2_800, EnergyParams(0.05, 1.0), P=33)


@pytest.fixture(scope="session")
def cmc_s2():
    return Interface.cmc(1.0, 2)


@pytest.fixture(scope="session")
def model():
    return comp.build_model()


@pytest.fixture(scope="session")
def ledger_no_eps(model):
    return comp.choose_constants(model, find_eps=False)


@pytest.fixture(scope="session")
def ledger(model):
    return comp.choose_constants(model)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    def record(number, title, passed, seconds, detail=""):
        line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title} ({seconds:.2f} s) {detail}"
        print(line)
        request.config.stash[ACCEPTANCE].append((number, line))
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
