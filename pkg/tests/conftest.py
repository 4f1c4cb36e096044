import pytest

from modesort.optics import Grid

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def grid():
    return Grid()


@pytest.fixture(scope="session")
def small_grid():
    return Grid(64)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
