import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.failed or report.skipped):
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    key = props["criterion"]
    entry = _CRITERIA.setdefault(key, {"title": props.get("title", ""), "ok": True, "detail": ""})
    if report.failed or report.skipped:
        entry["ok"] = False
    if "actual" in props:
        entry["detail"] = props["actual"]


def pytest_itemcollected(item):
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        item.user_properties.append(("criterion", mark.args[0]))
        item.user_properties.append(("title", mark.args[1]))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        entry = _CRITERIA[key]
        status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"[{status}] {key}. {entry['title']}: {entry['detail']}")
