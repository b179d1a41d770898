import pytest

from schemadep.data import Example, Table, make_question
from schemadep.sql import AggFn, Condition, CondOp, DepLabel, SqlSketch

FIG1_QUESTION = "What was the average Game, when the attendance was higher than 56,040?"
FIG1_HEADER = ["Game", "Data", "Source", "Location", "Time", "Attendance"]
FIG1_TYPES = ["real", "text", "text", "text", "text", "real"]
FIG1_SKETCH = SqlSketch(0, AggFn.AVG, (Condition(5, CondOp.GT, "56040"),))
# (question token, unified header index, label); headers start at n = 14
FIG1_LINKS = {
    (4, 14, DepLabel.S_COL),   # game -> [Game]
    (3, 14, DepLabel.S_AGG),   # average -> [Game]
    (8, 19, DepLabel.W_COL),   # attendance -> [Attendance]
    (12, 19, DepLabel.W_VAL),  # 56,040 -> [Attendance]
    (10, 19, DepLabel.W_OP),   # higher -> [Attendance]
    (11, 19, DepLabel.W_OP),   # than -> [Attendance]
}


def fig1_table(rows=None) -> Table:
    rows = rows or [
        ["3", "Oct 1", "AP", "Boston", "1:00", "56040"],
        ["5", "Oct 8", "AP", "Denver", "4:05", "57222"],
        ["2", "Oct 15", "UPI", "Miami", "8:30", "48000"],
    ]
    return Table.build("fig1", FIG1_HEADER, FIG1_TYPES, rows)


@pytest.fixture
def fig1():
    table = fig1_table()
    return Example(make_question(FIG1_QUESTION), table.id, FIG1_SKETCH), table


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")
    config._criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    detail = getattr(item, "criterion_detail", "")
    status = "PASS" if report.passed else "FAIL"
    item.config._criteria.append(f"{status}  {marker.args[0]}" + (f"  ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_criteria", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
