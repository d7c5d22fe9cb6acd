"""Shared pytest hooks: the acceptance-criteria summary.

Tests marked ``criterion(num, text)`` each stand for one acceptance check;
after the run a dedicated section prints exactly one pass/fail line per
criterion.
"""

import pytest

_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(num, text): acceptance criterion reported as one summary line")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, text = marker.args
    if rep.when == "call":
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _RESULTS[num] = (text, status)
    elif rep.failed:  # setup or teardown blew up: the criterion did not pass
        _RESULTS[num] = (text, "FAIL")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        text, status = _RESULTS[num]
        terminalreporter.write_line(f"criterion {num}: {status} - {text}")
