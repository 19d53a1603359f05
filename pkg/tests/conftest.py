import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

ACCEPTANCE = {}
NOTES = {}


@pytest.fixture
def note(request):
    """Attach a measured value to the summary line of the test's criterion."""
    mark = request.node.get_closest_marker("criterion")

    def add(text: str):
        NOTES.setdefault(mark.args[0], []).append(text)

    return add


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    label = getattr(report, "criterion", None)
    if label is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        key, title = label
        ok = ACCEPTANCE.get(key, (title, True))[1] and report.outcome == "passed"
        ACCEPTANCE[key] = (title, ok)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (str(k).split(".")[0].zfill(3), str(k))):
        title, ok = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {title}")
        for text in NOTES.get(key, []):
            terminalreporter.write_line(f"        {text}")
