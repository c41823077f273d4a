"""Shared plumbing for the acceptance checklist.

Each acceptance test prints one verdict line; pytest captures stdout, so
the lines are also collected here and replayed in the terminal summary
where they stay visible in a plain `pytest -v` run.
"""

import pytest

CRITERION_LINES: list[str] = []


def record_criterion(line: str) -> None:
    CRITERION_LINES.append(line)
    print(line)


@pytest.fixture(scope="session")
def record():
    return record_criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if CRITERION_LINES:
        terminalreporter.section("acceptance checklist")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
