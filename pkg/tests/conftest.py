"""Shared fixtures and the per-criterion acceptance summary."""

from collections import OrderedDict

import pytest

_CRITERIA: "OrderedDict[int, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    c = getattr(report, "criterion", None)
    if c is not None:
        n, title = c
        _CRITERIA.setdefault(n, {"title": title, "outcomes": []})["outcomes"].append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = tuple(m.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        c = _CRITERIA[n]
        outs = c["outcomes"]
        if all(o == "passed" for o in outs):
            state = "PASS"
        else:
            state = "FAIL"
        tr.write_line(f"criterion {n:2d}: {state:<7} {c['title']}")
