import pytest

from corridorstress.network import toy_network

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def t1():
    return toy_network()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
