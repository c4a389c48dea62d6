"""Prints one pass/fail line per acceptance criterion after the run."""

import re

_CRITERIA = {}
_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if not m:
        return
    num, name = int(m.group(1)), m.group(2).replace("_", " ")
    entry = _CRITERIA.setdefault(num, {"name": name, "outcome": "pass", "detail": ""})
    for key, value in report.user_properties:
        if key == "detail":
            entry["detail"] = value
    if report.failed:
        entry["outcome"] = "FAIL"
    elif report.skipped and entry["outcome"] == "pass":
        entry["outcome"] = "skip"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        e = _CRITERIA[num]
        line = f"criterion {num:2d} {e['outcome'].upper():4s}  {e['name']}"
        if e["detail"]:
            line += f"  ({e['detail']})"
        tr.write_line(line)
    passed = sum(e["outcome"] == "pass" for e in _CRITERIA.values())
    tr.write_line(f"{passed}/{len(_CRITERIA)} criteria pass")
