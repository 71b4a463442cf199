import time

import pytest

SUITE_BUDGET_S = 300.0

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}
_START = time.perf_counter()


def record(criterion: str, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(passed), detail)


@pytest.fixture
def acceptance():
    return record


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _START
    ok = elapsed < SUITE_BUDGET_S
    if ACCEPTANCE:
        record("AC9", ok, f"full suite wall time {elapsed:.1f}s (budget {SUITE_BUDGET_S:.0f}s)")
    if not ok and session.exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[2:])):
        passed, detail = ACCEPTANCE[key]
        tr.write_line(f"{key} {'PASS' if passed else 'FAIL'}: {detail}")
