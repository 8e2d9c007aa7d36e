import pytest

_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for the acceptance summary."""

    def record(number, ok, detail):
        _ACCEPTANCE.append((number, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
