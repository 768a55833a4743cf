"""Shared test plumbing.

The acceptance module records one status line per criterion; the hook below
prints them in a dedicated section at the end of the run so the pass/fail
status of every criterion is visible regardless of capture settings.
"""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def record_criterion():
    def _record(name: str, passed: bool, detail: str = ""):
        status = "PASS" if passed else "FAIL"
        line = f"{name}: {status}"
        if detail:
            line += f" ({detail})"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
