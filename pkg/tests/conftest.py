"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_RESULTS: dict = {}
DETAILS: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key, text = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        prev = _RESULTS.get(key)
        # a criterion split over several tests fails if any part fails
        if prev is None or prev[0] == "PASS" or status == "FAIL":
            _RESULTS[key] = (status, text)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(_RESULTS, key=str):
        status, text = _RESULTS[key]
        extra = DETAILS.get(key)
        tr.write_line(f"criterion {key}: {status}  {text}" + (f"  [{extra}]" if extra else ""))
