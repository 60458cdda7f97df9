import pytest

_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion and fail the test on FAIL."""

    def record(number, ok, message):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {message}"
        _LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
