import numpy as np
import pytest

from romclosure.fom import Grid, TimeMesh, generate_snapshots
from romclosure.pod import compute_pod


@pytest.fixture(scope="session")
def re1000_snapshots():
    """Training database: N=1024, 500 snapshots, Re=1000."""
    return generate_snapshots(Grid(1024), TimeMesh(500), 1e-3)


@pytest.fixture(scope="session")
def re1000_basis(re1000_snapshots):
    return compute_pod(re1000_snapshots, 8, 16)


@pytest.fixture(scope="session")
def small_snapshots():
    return generate_snapshots(Grid(256), TimeMesh(101), 1e-2)


@pytest.fixture(scope="session")
def small_basis(small_snapshots):
    return compute_pod(small_snapshots, 4, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_RESULTS = {}


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, then assert."""

    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_RESULTS[number] = line
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
