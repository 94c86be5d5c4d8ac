import os

import pytest

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when not in ("setup", "call"):
        return
    num, title = mark.args
    entry = _criteria.setdefault(num, {"title": title, "status": "pass", "reasons": []})
    if call.excinfo is None:
        return
    if call.excinfo.errisinstance(pytest.skip.Exception):
        if entry["status"] == "pass":
            entry["status"] = "skip"
        entry["reasons"].append(str(call.excinfo.value))
    else:
        entry["status"] = "FAIL"
        entry["reasons"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_criteria):
        e = _criteria[num]
        line = f"[{e['status'].upper():4}] criterion {num:2d}: {e['title']}"
        if e["status"] != "pass" and e["reasons"]:
            line += f" ({e['reasons'][0]})"
        tr.write_line(line)


@pytest.fixture(scope="session")
def dataset_manifest():
    path = os.environ.get("DEPLENS_DATASET")
    if not path or not os.path.exists(path):
        pytest.skip("published dataset not available; set DEPLENS_DATASET to its manifest")
    return path
