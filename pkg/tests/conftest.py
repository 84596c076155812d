import numpy as np
import pytest

from probespec.fixtures import two_level, water_analog


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def water():
    return water_analog()


@pytest.fixture
def qubit():
    return two_level()


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def report_criterion(capsys):
    """Record one pass/fail line for an acceptance criterion and echo it."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES[number] = line
        with capsys.disabled():
            print(f"\n{line}")

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
