import re

_CRITERION = re.compile(r"test_acceptance\.py::.*test_criterion_(\d+)(\w*)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    rows = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if getattr(rep, "when", "call") != "call":
                continue
            m = _CRITERION.search(rep.nodeid)
            if m:
                rows.append((int(m.group(1)), m.group(2), status.upper(), rep.nodeid.split("::")[-1]))
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num, _, status, name in sorted(rows):
        word = "PASS" if status == "PASSED" else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {num:02d} [{word}] {name}")
