import pytest


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and report.when == "call":
        reporter = item.config.pluginmanager.get_plugin("terminalreporter")
        if reporter is not None:
            number, description = marker.args
            status = "PASS" if report.passed else "FAIL"
            reporter.write_line(f"[acceptance] criterion {number}: {status} - {description}")
