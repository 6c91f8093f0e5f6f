import pytest

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    notes = [v for k, v in item.user_properties if k == "note"]
    entry = _criteria.setdefault(number, {"title": title, "parts": []})
    entry["parts"].append((item.name, report.passed, notes))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        ok = all(passed for _, passed, _ in entry["parts"])
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {entry['title']}")
        for name, passed, notes in entry["parts"]:
            if not ok or notes:
                terminalreporter.write_line(f"    {'ok  ' if passed else 'FAIL'} {name}")
            for note in notes:
                terminalreporter.write_line(f"         {note}")
