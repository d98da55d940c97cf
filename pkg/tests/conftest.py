import pytest

_REPORT: dict = {}


@pytest.fixture
def report(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    def emit(n: int, ok: bool, text: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {text}"
        _REPORT[n] = line
        with capsys.disabled():
            print("\n" + line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_REPORT):
            terminalreporter.write_line(_REPORT[n])
