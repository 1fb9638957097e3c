acceptance_results = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # one visible line per acceptance criterion, even when capture is on
    if acceptance_results:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_results:
            terminalreporter.write_line(line)
