"""Shared pytest wiring: surfaces the acceptance-criteria verdict lines in the
terminal summary so they are visible even when every test passes."""

acceptance_lines: list = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)
