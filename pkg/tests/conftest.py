import pytest

acceptance_lines: list[str] = []


@pytest.fixture
def acceptance_log():
    """Append-callable for `[ACCEPTANCE] ...` lines replayed at session end."""
    return acceptance_lines.append


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)
