import random

import pytest
from hypothesis import given, settings, strategies as st

from schemadep.data import Table
from schemadep.execution import (
    CoercionFailure,
    ExecOutcome,
    RuntimeErrorKind,
    coerce_cell,
    compare,
    execute,
    outcomes_match,
)
from schemadep.sql import AggFn, Condition, CondOp, SqlSketch
from conftest import FIG1_SKETCH, fig1_table
from oracles import random_sketch, random_table, run_oracle_trials, scan


def test_coerce_cell():
    assert coerce_cell("56,040", "real") == 56040.0
    assert isinstance(coerce_cell("abc", "real"), CoercionFailure)
    assert coerce_cell("New York ", "text") == "new york"


@pytest.mark.parametrize(
    "cell, op, value, kind, want",
    [
        ("56040", CondOp.GT, "56,040", "real", False),
        ("57000", CondOp.GT, "56040", "real", True),
        ("alpha", CondOp.GT, "5", "text", RuntimeErrorKind.COMPARE_TYPE_MISMATCH),
        ("12", CondOp.LT, "13", "text", True),
        ("56,040", CondOp.EQ, "56040", "real", True),
        ("n/a", CondOp.EQ, "5", "real", False),
        ("n/a", CondOp.LT, "5", "real", RuntimeErrorKind.COMPARE_TYPE_MISMATCH),
        ("5", CondOp.EQ, "five", "real", RuntimeErrorKind.UNPARSEABLE_VALUE),
        (" Boston", CondOp.EQ, "boston ", "text", True),
    ],
)
def test_compare(cell, op, value, kind, want):
    assert compare(cell, op, value, kind) == want


def test_fig1_query_executes_to_average_game(fig1):
    _, table = fig1
    assert execute(FIG1_SKETCH, table) == ExecOutcome(5.0)


def test_sum_over_text_column():
    table = fig1_table()
    out = execute(SqlSketch(1, AggFn.SUM), table)
    assert out.error == RuntimeErrorKind.AGG_TYPE_MISMATCH


def test_count_with_no_matches_is_zero():
    table = fig1_table()
    sketch = SqlSketch(0, AggFn.COUNT, (Condition(5, CondOp.GT, "1000000"),))
    assert execute(sketch, table) == ExecOutcome(0)


def test_empty_numeric_aggregate_is_null():
    table = fig1_table()
    sketch = SqlSketch(0, AggFn.MAX, (Condition(5, CondOp.GT, "1000000"),))
    out = execute(sketch, table)
    assert out.ok and out.result is None and out.empty


def test_projection_keeps_row_order():
    table = fig1_table()
    assert execute(SqlSketch(0, AggFn.NONE, (Condition(5, CondOp.GT, "50000"),)), table).result == ("3", "5")


def test_bad_column():
    table = fig1_table()
    assert execute(SqlSketch(9), table).error == RuntimeErrorKind.BAD_COLUMN
    assert execute(SqlSketch(0, conds=(Condition(-1, CondOp.EQ, "x"),)), table).error == RuntimeErrorKind.BAD_COLUMN


def test_one_dirty_cell_breaks_the_average():
    table = Table.build("d", ["x"], ["real"], [["1"], ["n/a"], ["3"]])
    assert execute(SqlSketch(0, AggFn.AVG), table).error == RuntimeErrorKind.AGG_TYPE_MISMATCH
    assert execute(SqlSketch(0, AggFn.COUNT), table) == ExecOutcome(3)
    ok = SqlSketch(0, AggFn.AVG, (Condition(0, CondOp.EQ, "3"),))
    assert execute(ok, table) == ExecOutcome(3.0)


def test_matches_row_scan_oracle():
    assert run_oracle_trials(2000, seed=1) == []


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_execute_is_pure(seed):
    rng = random.Random(seed)
    table = random_table(rng)
    sketch = random_sketch(rng, table)
    assert execute(sketch, table) == execute(sketch, table)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_adding_a_condition_never_grows_the_result(seed):
    rng = random.Random(seed)
    table = random_table(rng)
    base = random_sketch(rng, table, allow_bad=False)
    base = SqlSketch(base.sel_col, AggFn.COUNT, base.conds)
    extra = random_sketch(rng, table, allow_bad=False).conds
    if not extra:
        return
    wider = SqlSketch(base.sel_col, AggFn.COUNT, base.conds + extra[:1])
    a, b = execute(base, table), execute(wider, table)
    if a.ok and b.ok:
        assert b.result <= a.result


def test_oracle_agrees_on_hand_cases(fig1):
    _, table = fig1
    assert scan(FIG1_SKETCH, table) == ("ok", 5.0)


def test_outcomes_match_rules():
    assert outcomes_match(ExecOutcome(None), ExecOutcome(None))
    assert not outcomes_match(ExecOutcome(None), ExecOutcome(0.0))
    err = ExecOutcome(error=RuntimeErrorKind.BAD_COLUMN)
    assert not outcomes_match(err, err)
    assert outcomes_match(ExecOutcome(("A", "b")), ExecOutcome(("b", "a ")))
    assert not outcomes_match(ExecOutcome(("a",)), ExecOutcome(("a", "a")))
    assert not outcomes_match(ExecOutcome(("1",)), ExecOutcome(1))
    assert outcomes_match(ExecOutcome(0.1 + 0.2), ExecOutcome(0.3))
