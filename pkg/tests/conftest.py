import pytest

_CRITERIA = {}


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records one acceptance line and fails the test if ``ok`` is false."""
    def report(n, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}"
        _CRITERIA[n] = line
        print(line)
        assert ok, line
    return report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in range(1, 15):
        missing = f"NOT RUN criterion {n:2d}: no result recorded (deselected, skipped or errored)"
        terminalreporter.write_line(_CRITERIA.get(n, missing))
