from hypothesis import settings

# first calls pay for JIT compilation, so per-example deadlines are meaningless
settings.register_profile("surf", deadline=None)
settings.load_profile("surf")


def pytest_terminal_summary(terminalreporter):
    import sys

    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
