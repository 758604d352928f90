import pytest

from kdilation.generators import GRAPH_FIXTURES, fixture_family, fixture_file, fixture_graph

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def graphs():
    return {name: fixture_graph(name) for name in GRAPH_FIXTURES}


@pytest.fixture
def family():
    return fixture_family


@pytest.fixture
def fixture_path():
    return fixture_file
