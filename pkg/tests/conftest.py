"""Shared pytest plumbing.

The acceptance tests register one summary line per criterion here; the
terminal-summary hook prints them after the run so the pass/fail lines are
visible even with output capture on.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
