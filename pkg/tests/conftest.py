import pytest

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record an acceptance verdict: criterion(number, passed, detail)."""
    def record(number, passed, detail=""):
        # parametrized criteria report several times; any failure sticks
        prev = _CRITERIA.get(number)
        if prev is not None and not prev[0] and passed:
            return passed
        _CRITERIA[number] = (bool(passed), detail)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
