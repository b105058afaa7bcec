import pytest

from ringbethe.spectrum import SystemConfig

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    passed = report.passed if report.when == "call" else None
    if report.when == "setup" and not report.passed:
        passed = False
    if passed is None:
        return
    notes = [v for k, v in item.user_properties if k == "measured"]
    prev_title, prev_passed, prev_notes = _CRITERIA.get(number, (title, True, []))
    _CRITERIA[number] = (title, prev_passed and passed, prev_notes + notes)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed, notes = _CRITERIA[number]
        detail = f"  [{'; '.join(notes)}]" if notes else ""
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {title}{detail}")


@pytest.fixture
def measured(request):
    """Attach a measurement note to the current test for the criteria summary."""
    def note(text):
        request.node.user_properties.append(("measured", text))
        print(text)
    return note


@pytest.fixture
def base_cfg():
    return SystemConfig.from_values(2.0, 0.0, 0.1, 5.0)
