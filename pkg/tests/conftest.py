import pytest

from etpa.config import load_config
from etpa.molecule import nile_red
from etpa.source import GridConfig

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def preset():
    """Shipped Nile Red / PPLN / 532 nm configuration."""
    return load_config()


@pytest.fixture(scope="session")
def model():
    return nile_red()


@pytest.fixture(scope="session")
def small_grid():
    return GridConfig(n_omega0=33, n_nu=2049)


@pytest.fixture
def report():
    def _report(number, ok, detail):
        ACCEPTANCE_LINES.append((number, "PASS" if ok else "FAIL", detail))
    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, detail in sorted(ACCEPTANCE_LINES, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {detail}")
