"""Domain types for questions, schemas, SQL sketches and dependency graphs."""

from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

K_MAX = 4

_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_WS_RE = re.compile(r"\s+")
_QUOTES = "\"'`"


class AggFn(enum.IntEnum):
    NONE = 0
    MAX = 1
    MIN = 2
    COUNT = 3
    SUM = 4
    AVG = 5


class CondOp(enum.IntEnum):
    EQ = 0
    GT = 1
    LT = 2

    @property
    def symbol(self) -> str:
        return ("=", ">", "<")[self]


class DepLabel(enum.IntEnum):
    S_COL = 0
    S_AGG = 1
    W_COL = 2
    W_OP = 3
    W_VAL = 4


class ColType(str, enum.Enum):
    TEXT = "text"
    REAL = "real"


def parse_number(s: str) -> Optional[float]:
    """Parse a plain decimal literal; returns None for anything else (including nan/inf)."""
    s = s.strip()
    if not _NUMBER_RE.match(s):
        return None
    return float(s)


def normalize_value(s: str) -> str:
    """Canonical form of a literal used for matching and comparison.

    Lowercases, strips surrounding whitespace and quotes, collapses inner
    whitespace runs, and drops thousands separators when the remainder is a
    number (``"56,040" -> "56040"``, ``"a,b"`` is left alone).
    """
    s = s.strip().strip(_QUOTES).strip()
    s = _WS_RE.sub(" ", s.lower())
    if "," in s:
        stripped = s.replace(",", "")
        if parse_number(stripped) is not None:
            s = stripped
    return s


@dataclass(frozen=True)
class Token:
    surface: str
    char_start: int
    char_end: int
    normalized: str


@dataclass(frozen=True)
class Question:
    raw_text: str
    tokens: tuple[Token, ...]

    @property
    def n(self) -> int:
        return len(self.tokens)

    def span_text(self, start: int, end: int) -> str:
        """Original substring covered by tokens ``start..end`` (inclusive)."""
        return self.raw_text[self.tokens[start].char_start : self.tokens[end].char_end]

    @property
    def words(self) -> list[str]:
        return [t.normalized for t in self.tokens]


@dataclass(frozen=True)
class Header:
    name: str
    tokens: tuple[str, ...]
    col_type: ColType = ColType.TEXT


@dataclass(frozen=True)
class Schema:
    table_id: str
    headers: tuple[Header, ...]

    def __post_init__(self):
        if not self.headers:
            raise ValueError(f"schema {self.table_id!r} has no headers")
        names = [h.name.lower() for h in self.headers]
        dup = [n for n, c in Counter(names).items() if c > 1]
        if dup:
            raise ValueError(f"schema {self.table_id!r} has duplicate headers: {dup}")

    @property
    def m(self) -> int:
        return len(self.headers)

    @property
    def names(self) -> list[str]:
        return [h.name for h in self.headers]


@dataclass(frozen=True)
class Condition:
    col: int
    op: CondOp
    value: str

    def key(self) -> tuple[int, int, str]:
        return (self.col, int(self.op), normalize_value(self.value))


@dataclass(frozen=True)
class SqlSketch:
    sel_col: int
    agg: AggFn = AggFn.NONE
    conds: tuple[Condition, ...] = ()

    def to_json(self) -> dict:
        return {
            "sel": self.sel_col,
            "agg": int(self.agg),
            "conds": [[c.col, int(c.op), c.value] for c in self.conds],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SqlSketch":
        conds = tuple(
            Condition(int(col), CondOp(int(op)), _stringify(val)) for col, op, val in obj["conds"]
        )
        return cls(int(obj["sel"]), AggFn(int(obj["agg"])), conds)


def _stringify(val) -> str:
    if isinstance(val, bool):
        return str(val).lower()
    if isinstance(val, float) and val.is_integer():
        return str(int(val))
    return str(val)


@dataclass(frozen=True)
class DependencyGraph:
    """Labeled edges over the unified index space.

    Question tokens occupy ``[0, n)`` and headers ``[n, n + m)``; an edge is a
    ``(dep, head)`` pair.
    """

    n: int
    m: int
    labels: dict[tuple[int, int], DepLabel] = field(default_factory=dict)

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.labels)

    @property
    def size(self) -> int:
        return self.n + self.m

    def triples(self) -> list[tuple[int, int, DepLabel]]:
        return sorted((d, h, lab) for (d, h), lab in self.labels.items())

    def to_json(self) -> list[list]:
        return [[d, h, lab.name] for d, h, lab in self.triples()]


class SketchViolation(str, enum.Enum):
    SEL_OUT_OF_RANGE = "sel-out-of-range"
    COND_OUT_OF_RANGE = "cond-out-of-range"
    TOO_MANY_CONDITIONS = "too-many-conditions"
    DUPLICATE_CONDITION = "duplicate-condition"
    EMPTY_VALUE = "empty-value"
    BAD_AGG = "bad-agg"
    BAD_OP = "bad-op"


def validate_sketch(sketch: SqlSketch, schema: Schema) -> list[SketchViolation]:
    """Every invariant violation of ``sketch`` against ``schema``; empty means valid."""
    out = []
    m = schema.m
    if not 0 <= sketch.sel_col < m:
        out.append(SketchViolation.SEL_OUT_OF_RANGE)
    if sketch.agg not in tuple(AggFn):
        out.append(SketchViolation.BAD_AGG)
    if len(sketch.conds) > K_MAX:
        out.append(SketchViolation.TOO_MANY_CONDITIONS)
    seen = set()
    for c in sketch.conds:
        if not 0 <= c.col < m:
            out.append(SketchViolation.COND_OUT_OF_RANGE)
        if c.op not in tuple(CondOp):
            out.append(SketchViolation.BAD_OP)
        if not c.value.strip():
            out.append(SketchViolation.EMPTY_VALUE)
        if c.key() in seen:
            out.append(SketchViolation.DUPLICATE_CONDITION)
        seen.add(c.key())
    return out


def render_value(value: str) -> str:
    """Display form of a literal: numbers lose thousands separators, text is verbatim."""
    stripped = value.strip().replace(",", "")
    if "," in value and parse_number(stripped) is not None:
        return stripped
    return value.strip()


def canonical_sql(sketch: SqlSketch, schema: Schema, normalized: bool = False) -> str:
    """Render ``sketch`` as a SQL string.

    Conditions appear in stored order. With ``normalized`` set they are sorted
    by key and values are rendered in normalized form, so sketches that are
    equal under :func:`sketch_eq_lf` render identically.
    """
    col = schema.headers[sketch.sel_col].name
    head = col if sketch.agg == AggFn.NONE else f"{sketch.agg.name}({col})"
    sql = f"SELECT {head} FROM table"
    conds: Iterable[Condition] = sketch.conds
    if normalized:
        conds = sorted(conds, key=Condition.key)
        parts = [f"{schema.headers[c.col].name} {c.op.symbol} {c.key()[2]}" for c in conds]
    else:
        parts = [
            f"{schema.headers[c.col].name} {c.op.symbol} {render_value(c.value)}" for c in conds
        ]
    if parts:
        sql += " WHERE " + " AND ".join(parts)
    return sql


def sketch_eq_lf(a: SqlSketch, b: SqlSketch) -> bool:
    """Logical-form equality: conditions compare as a multiset of normalized triples."""
    return (
        a.sel_col == b.sel_col
        and a.agg == b.agg
        and Counter(c.key() for c in a.conds) == Counter(c.key() for c in b.conds)
    )
