"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""
import pytest

_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    crit = item.get_closest_marker("criterion")
    if crit is None:
        return
    num, title = crit.args
    if rep.failed or rep.when == "call":
        prev = _ACCEPTANCE.get(num, (title, "PASS"))
        status = "FAIL" if rep.failed or prev[1] == "FAIL" else "PASS"
        _ACCEPTANCE[num] = (title, status)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        title, status = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {title}")
