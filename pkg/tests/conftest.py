"""Shared pytest hooks: print the acceptance summary at the end of the run."""

from _acceptance_report import LINES


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
