import pytest

ACCEPTANCE = {}


@pytest.fixture
def record():
    """Store one summary line per acceptance criterion for the terminal report."""
    def _record(key, ok, detail):
        ACCEPTANCE[key] = (ok, detail)
        print(f"{key} {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}  {detail}")
