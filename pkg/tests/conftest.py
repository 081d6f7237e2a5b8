import pytest

_LINES = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the returned callable asserts the verdict."""
    lines = request.config.stash.setdefault(_LINES, {})

    def record(number: int, passed: bool, detail: str, elapsed: float, budget: float):
        in_time = elapsed < budget
        verdict = "PASS" if passed and in_time else "FAIL"
        line = f"criterion {number:>2}: {verdict}  {detail}  ({elapsed:.2f}s, budget {budget:g}s)"
        lines[number] = line
        print(line)
        assert passed, line
        assert in_time, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
