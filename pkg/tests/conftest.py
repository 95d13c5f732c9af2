import gate


def pytest_terminal_summary(terminalreporter):
    if gate.LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(gate.LINES):
            terminalreporter.write_line(gate.LINES[n])
