import os

import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=200, deadline=None)
settings.register_profile("dev", max_examples=50, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

_acceptance = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance", None)
    if marker is None:
        return
    number, title = marker
    outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    if report.when == "call" or outcome != "PASS":
        previous = _acceptance.get((number, title))
        if previous in (None, "PASS"):
            _acceptance[(number, title)] = outcome


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        report.acceptance = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), outcome in sorted(_acceptance.items()):
        terminalreporter.write_line(f"[{outcome}] AC{number}: {title}")


@pytest.fixture
def catalog():
    from nafas.catalog import Catalog

    return Catalog()
