import sys


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in sorted(lines):
        terminalreporter.write_line(lines[k])
