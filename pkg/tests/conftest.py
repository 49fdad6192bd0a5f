import pytest

ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.fixture
def record():
    """Record one acceptance line: record(k, passed, detail)."""

    def _record(k: int, passed: bool, detail: str):
        ACCEPTANCE[k] = ("PASS" if passed else "FAIL", detail)
        print(f"acceptance {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{k:2d}  {status}  {detail}")
