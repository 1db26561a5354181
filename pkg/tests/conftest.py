import pytest

from ppsc import fixtures

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def example_tree():
    return fixtures.example_tree()


@pytest.fixture
def example_graph():
    return fixtures.example_graph()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
