import os

import pytest

_VERDICTS = {}


def pytest_collection_modifyitems(config, items):
    if os.environ.get("HAPSRSMA_FULLSCALE") == "1":
        return
    skip = pytest.mark.skip(reason="full-scale run; set HAPSRSMA_FULLSCALE=1")
    for item in items:
        if "fullscale" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def verdict():
    """Record one acceptance line, print it, and fail the test if it did not hold."""

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 11):
        missing = "SKIPPED  opt-in, set HAPSRSMA_FULLSCALE=1" if number == 10 else "NOT RUN"
        terminalreporter.write_line(_VERDICTS.get(number, f"criterion {number:2d}: {missing}"))
