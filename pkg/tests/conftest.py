import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request, capsys):
    """``record(n, ok, detail)``: print one PASS/FAIL line for criterion ``n`` and assert it."""

    def record(n, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        request.config.stash.setdefault(_LINES, []).append((n, line))
        with capsys.disabled():
            print("\n" + line, flush=True)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
