def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay the acceptance criterion outcomes uncaptured at the end of the
    run (passing tests' stdout is normally swallowed)."""
    try:
        from test_acceptance import CRITERION_RESULTS
    except ImportError:
        return
    if CRITERION_RESULTS:
        terminalreporter.section("acceptance criteria")
        for name, outcome in CRITERION_RESULTS:
            terminalreporter.write_line(f"ACCEPTANCE {name}: {outcome}")
