def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS, _line

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(_line(n, RESULTS[n]))
