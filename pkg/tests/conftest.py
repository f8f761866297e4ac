import pytest

CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[CRITERIA] = {}


@pytest.fixture
def record(request):
    """Store a PASS/FAIL line for an acceptance criterion."""
    table = request.config.stash[CRITERIA]

    def _record(number: int, ok: bool, detail: str):
        table[number] = "criterion %d: %s  %s" % (number, "PASS" if ok else "FAIL", detail)
        print(table[number])
        return ok

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = config.stash.get(CRITERIA, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(table):
        terminalreporter.write_line(table[k])
