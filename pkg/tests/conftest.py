import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ipdlab.geometry import validate_params  # noqa: E402


@pytest.fixture
def game():
    return validate_params(5, 3, 1, 0)


@pytest.fixture
def fgame():
    return validate_params(5.0, 3.0, 1.0, 0.0)


@pytest.fixture
def tri_game():
    return validate_params(5, 4, 3, 0)


@pytest.fixture
def half():
    return Fraction(1, 2)


# one line per acceptance criterion, echoed after the run so it survives output capture
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
