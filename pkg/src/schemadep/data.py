"""Loading examples and tables from JSONL, plus the rule tokenizer."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Union

from .sql import (
    ColType,
    Header,
    Question,
    Schema,
    SqlSketch,
    Token,
    normalize_value,
    parse_number,
    validate_sketch,
)

PathLike = Union[str, Path]

_PUNCT = set(",.?!\"'")
_CHUNK_RE = re.compile(r"\S+")


class DataError(ValueError):
    """Malformed input record; ``line`` is 1-based when known."""

    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


def _token(text: str, start: int, end: int) -> Token:
    surface = text[start:end]
    return Token(surface, start, end, surface.lower())


def tokenize(text: str) -> list[Token]:
    """Split on whitespace and peel leading/trailing ``, . ? ! " '`` into their own tokens.

    Punctuation inside a chunk is left attached, which keeps numerals like
    ``56,040`` or ``3.5`` whole.
    """
    tokens: list[Token] = []
    for m in _CHUNK_RE.finditer(text):
        lo, hi = m.start(), m.end()
        lead = []
        while lo < hi and text[lo] in _PUNCT:
            lead.append(_token(text, lo, lo + 1))
            lo += 1
        trail = []
        while hi > lo and text[hi - 1] in _PUNCT:
            trail.append(_token(text, hi - 1, hi))
            hi -= 1
        tokens.extend(lead)
        if lo < hi:
            tokens.append(_token(text, lo, hi))
        tokens.extend(reversed(trail))
    return tokens


def make_question(text: str) -> Question:
    return Question(text, tuple(tokenize(text)))


def make_header(name: str, col_type: Union[str, ColType] = ColType.TEXT) -> Header:
    words = tuple(t.normalized for t in tokenize(name) if t.surface not in _PUNCT)
    return Header(name, words or (name.lower(),), ColType(col_type))


@dataclass(frozen=True)
class Table:
    id: str
    schema: Schema
    rows: tuple[tuple[str, ...], ...]
    dirty_cells: int = 0

    @classmethod
    def build(cls, table_id: str, header: list[str], types: list[str], rows: list[list]) -> "Table":
        headers = tuple(make_header(h, t) for h, t in zip(header, types))
        schema = Schema(table_id, headers)
        cells = tuple(tuple(str(c) for c in row) for row in rows)
        dirty = sum(
            1
            for row in cells
            for h, c in zip(headers, row)
            if h.col_type == ColType.REAL and parse_number(normalize_value(c)) is None
        )
        return cls(table_id, schema, cells, dirty)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "header": self.schema.names,
            "types": [h.col_type.value for h in self.schema.headers],
            "rows": [list(r) for r in self.rows],
        }


@dataclass(frozen=True)
class Example:
    question: Question
    table_id: str
    gold: SqlSketch

    def to_json(self) -> dict:
        return {"question": self.question.raw_text, "table_id": self.table_id, "sql": self.gold.to_json()}


def _records(path: PathLike) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"malformed JSON: {e.msg}", lineno) from None
            if not isinstance(obj, dict):
                raise DataError("record is not a JSON object", lineno)
            yield lineno, obj


def load_tables(path: PathLike) -> dict[str, Table]:
    """Read ``tables.jsonl``: one ``{"id", "header", "types", "rows"}`` object per line."""
    tables: dict[str, Table] = {}
    for lineno, obj in _records(path):
        try:
            tid, header, types, rows = obj["id"], obj["header"], obj["types"], obj["rows"]
        except KeyError as e:
            raise DataError(f"missing field {e.args[0]!r}", lineno) from None
        if tid in tables:
            raise DataError(f"duplicate table id {tid!r}", lineno)
        if len(types) != len(header):
            raise DataError(f"{len(types)} types for {len(header)} headers", lineno)
        for t in types:
            if t not in ("text", "real"):
                raise DataError(f"unknown column type {t!r}", lineno)
        for i, row in enumerate(rows):
            if len(row) != len(header):
                raise DataError(
                    f"row {i} of table {tid!r} has {len(row)} cells for {len(header)} headers", lineno
                )
        try:
            tables[tid] = Table.build(tid, header, types, rows)
        except ValueError as e:
            raise DataError(str(e), lineno) from None
    return tables


def load_examples(path: PathLike, tables: Mapping[str, Table]) -> list[Example]:
    """Read ``examples.jsonl`` in the WikiSQL release layout and validate each gold sketch."""
    out = []
    for lineno, obj in _records(path):
        try:
            text, tid, sql = obj["question"], obj["table_id"], obj["sql"]
        except KeyError as e:
            raise DataError(f"missing field {e.args[0]!r}", lineno) from None
        if tid not in tables:
            raise DataError(f"unknown table id {tid!r}", lineno)
        try:
            gold = SqlSketch.from_json(sql)
        except (KeyError, ValueError, TypeError) as e:
            raise DataError(f"invalid sketch: {e}", lineno) from None
        problems = validate_sketch(gold, tables[tid].schema)
        if problems:
            raise DataError(f"invalid sketch: {', '.join(p.value for p in problems)}", lineno)
        out.append(Example(make_question(text), tid, gold))
    return out


def save_examples(path: PathLike, examples: Iterable[Example]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_json(), ensure_ascii=False) + "\n")


def save_tables(path: PathLike, tables: Iterable[Table]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in tables:
            fh.write(json.dumps(t.to_json(), ensure_ascii=False) + "\n")
