"""Shared pytest wiring: per-criterion summary lines for the acceptance suite."""


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome, mark in (("passed", "PASS"), ("failed", "FAIL"),
                          ("error", "FAIL")):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" in props:
                rows.append((props["criterion"], mark,
                             props.get("evidence", "")))
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for label, mark, evidence in rows:
        line = f"[{mark}] {label}"
        if evidence:
            line += f" — {evidence}"
        terminalreporter.write_line(line)
