"""Shared fixtures and the acceptance criterion ledger.

Acceptance tests record one entry per criterion through the
``acceptance_ledger`` fixture; a terminal-summary hook prints one
PASS/FAIL line per criterion at the end of the run so the gate's
outcome is visible even when pytest captures stdout.
"""

import pytest

N_CRITERIA = 9
_LEDGER: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def acceptance_ledger():
    """Recorder: call with (number, name, passed, detail)."""

    def record(num: int, name: str, passed: bool, detail: str = "") -> None:
        _LEDGER[num] = (name, passed, detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _LEDGER:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in range(1, N_CRITERIA + 1):
        if num in _LEDGER:
            name, passed, detail = _LEDGER[num]
            status = "PASS" if passed else "FAIL"
            line = f"CRITERION {num} [{name}]: {status}"
            if detail:
                line += f" ({detail})"
        else:
            line = f"CRITERION {num}: NOT RUN"
        tr.write_line(line)
