import pytest

from exosim.metrics import DEFAULT_PAYLOADS, run_grid
from exosim.sim import Scenario

_ACCEPTANCE: list[str] = []


class AcceptanceReport:
    def record(self, label: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        print(line)
        _ACCEPTANCE.append(line)
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceReport()


@pytest.fixture(scope="session")
def default_grid():
    """Every (payload, mode) cell of the default scenario, run once per session."""
    return run_grid(Scenario(), DEFAULT_PAYLOADS)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
