"""Executing sketches against in-memory tables."""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass
from typing import Any, Optional, Union

from .data import Table
from .sql import AggFn, ColType, CondOp, SqlSketch, normalize_value, parse_number


class RuntimeErrorKind(str, enum.Enum):
    AGG_TYPE_MISMATCH = "agg-type-mismatch"
    COMPARE_TYPE_MISMATCH = "compare-type-mismatch"
    BAD_COLUMN = "bad-column"
    UNPARSEABLE_VALUE = "unparseable-value"


@dataclass(frozen=True)
class ExecOutcome:
    """Either a result or an error.

    ``result`` is a tuple of cells for plain projections, an int for COUNT,
    and a float or None (SQL NULL) for the numeric aggregates.
    """

    result: Any = None
    error: Optional[RuntimeErrorKind] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def empty(self) -> bool:
        return self.ok and (self.result is None or self.result == ())


class CoercionFailure:
    """Marker for a cell that does not parse under its column type."""

    __slots__ = ("cell",)

    def __init__(self, cell: str):
        self.cell = cell

    def __repr__(self) -> str:
        return f"CoercionFailure({self.cell!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, CoercionFailure) and other.cell == self.cell

    def __hash__(self) -> int:
        return hash(self.cell)


def coerce_cell(cell: str, col_type: Union[ColType, str]) -> Union[float, str, CoercionFailure]:
    if ColType(col_type) == ColType.REAL:
        number = parse_number(normalize_value(cell))
        return CoercionFailure(cell) if number is None else number
    return normalize_value(cell)


def _number(s: str) -> Optional[float]:
    return parse_number(normalize_value(s))


def compare(
    cell: str, op: CondOp, value: str, col_type: Union[ColType, str]
) -> Union[bool, RuntimeErrorKind]:
    """Evaluate ``cell OP value`` under the column type.

    Real columns compare numerically; a condition value that does not parse is
    UNPARSEABLE_VALUE, a dirty cell never equals anything and cannot be
    ordered. Text columns compare normalized strings for ``=`` and allow
    ``<``/``>`` only when both sides are numeric.
    """
    op = CondOp(op)
    if ColType(col_type) == ColType.REAL:
        v = _number(value)
        if v is None:
            return RuntimeErrorKind.UNPARSEABLE_VALUE
        c = _number(cell)
        if op == CondOp.EQ:
            return c is not None and c == v
        if c is None:
            return RuntimeErrorKind.COMPARE_TYPE_MISMATCH
    else:
        if op == CondOp.EQ:
            return normalize_value(cell) == normalize_value(value)
        c, v = _number(cell), _number(value)
        if c is None or v is None:
            return RuntimeErrorKind.COMPARE_TYPE_MISMATCH
    return c > v if op == CondOp.GT else c < v


NUMERIC_AGGS = (AggFn.MAX, AggFn.MIN, AggFn.SUM, AggFn.AVG)


def execute(sketch: SqlSketch, table: Table) -> ExecOutcome:
    """Run ``sketch`` over ``table``.

    Checks happen in a fixed order: column indices, then numeric aggregation
    over a text column, then a row-major scan evaluating every condition of
    every row (the first error found aborts), then aggregation of the
    selected cells of the surviving rows.
    """
    headers = table.schema.headers
    m = len(headers)
    if not 0 <= sketch.sel_col < m or any(not 0 <= c.col < m for c in sketch.conds):
        return ExecOutcome(error=RuntimeErrorKind.BAD_COLUMN)
    sel_type = headers[sketch.sel_col].col_type
    if sketch.agg in NUMERIC_AGGS and sel_type == ColType.TEXT:
        return ExecOutcome(error=RuntimeErrorKind.AGG_TYPE_MISMATCH)

    selected = []
    for row in table.rows:
        keep = True
        for cond in sketch.conds:
            verdict = compare(row[cond.col], cond.op, cond.value, headers[cond.col].col_type)
            if isinstance(verdict, RuntimeErrorKind):
                return ExecOutcome(error=verdict)
            keep = keep and verdict
        if keep:
            selected.append(row[sketch.sel_col])

    if sketch.agg == AggFn.NONE:
        return ExecOutcome(tuple(selected))
    if sketch.agg == AggFn.COUNT:
        return ExecOutcome(len(selected))
    values = [coerce_cell(c, sel_type) for c in selected]
    if any(isinstance(v, CoercionFailure) for v in values):
        return ExecOutcome(error=RuntimeErrorKind.AGG_TYPE_MISMATCH)
    if not values:
        return ExecOutcome(None)
    if sketch.agg == AggFn.MAX:
        return ExecOutcome(max(values))
    if sketch.agg == AggFn.MIN:
        return ExecOutcome(min(values))
    if sketch.agg == AggFn.SUM:
        return ExecOutcome(math.fsum(values))
    return ExecOutcome(math.fsum(values) / len(values))


def outcomes_match(a: ExecOutcome, b: ExecOutcome) -> bool:
    """Execution-accuracy equality: errors never match; lists compare as multisets."""
    if not (a.ok and b.ok):
        return False
    x, y = a.result, b.result
    if isinstance(x, tuple) or isinstance(y, tuple):
        if not (isinstance(x, tuple) and isinstance(y, tuple)):
            return False
        return Counter(map(normalize_value, x)) == Counter(map(normalize_value, y))
    if x is None or y is None:
        return x is None and y is None
    return math.isclose(x, y, rel_tol=1e-9, abs_tol=1e-9)
