"""Heuristic construction of gold question-to-header dependency graphs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .data import Example, tokenize
from .sql import (
    AggFn,
    CondOp,
    DepLabel,
    DependencyGraph,
    Question,
    Schema,
    normalize_value,
    parse_number,
)

Span = tuple[int, int]  # inclusive token indices

LEXICON_SECTIONS = ("GT", "LT", "EQ", "AVG", "SUM", "COUNT", "MAX", "MIN")

# partial header matches made only of these words are ignored
STOPWORDS = frozenset(
    "a an the of in on at to for by with and or no is was are be from as per".split()
)


def stem(word: str) -> str:
    """Small suffix stripper: -ies, -es, -s, -ed, -ing, -ly with length guards."""
    w = word.lower()
    if len(w) <= 3 or not w.isalpha():
        return w
    if w.endswith("ies") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("es") and w[-3] in "sxz" and len(w) > 4:
        return w[:-2]
    if w.endswith(("ches", "shes")):
        return w[:-2]
    if w.endswith("s") and not w.endswith(("ss", "us", "is")):
        return w[:-1]
    for suffix in ("ing", "ed", "ly"):
        if w.endswith(suffix) and len(w) - len(suffix) >= 3:
            return w[: -len(suffix)]
    return w


@dataclass(frozen=True)
class Lexicon:
    """Phrase lists keyed by section name (``GT``, ``AVG``, ...), each phrase a word tuple."""

    phrases: Mapping[str, tuple[tuple[str, ...], ...]]

    @classmethod
    def parse(cls, text: str) -> "Lexicon":
        sections: dict[str, list[tuple[str, ...]]] = {}
        current = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip().upper()
                if current not in LEXICON_SECTIONS:
                    raise ValueError(f"line {lineno}: unknown lexicon section [{current}]")
                sections.setdefault(current, [])
                continue
            if current is None:
                raise ValueError(f"line {lineno}: phrase outside of a section")
            words = tuple(t.normalized for t in tokenize(line))
            if words not in sections[current]:
                sections[current].append(words)
        return cls({k: tuple(v) for k, v in sections.items()})

    @classmethod
    def load(cls, path: Union[str, Path, None] = None) -> "Lexicon":
        """Load a lexicon file, or a directory's ``*.txt`` files merged, or the bundled default."""
        if path is None:
            text = resources.files("schemadep").joinpath("resources/lexicons.txt").read_text("utf-8")
            return cls.parse(text)
        path = Path(path)
        if path.is_dir():
            text = "\n".join(p.read_text("utf-8") for p in sorted(path.glob("*.txt")))
        else:
            text = path.read_text("utf-8")
        return cls.parse(text)

    def get(self, section: str) -> tuple[tuple[str, ...], ...]:
        return self.phrases.get(section, ())


_DEFAULT_LEXICON: Optional[Lexicon] = None


def default_lexicon() -> Lexicon:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        _DEFAULT_LEXICON = Lexicon.load()
    return _DEFAULT_LEXICON


def _free(span: Span, exclude: Optional[set[int]]) -> bool:
    return not exclude or all(i not in exclude for i in range(span[0], span[1] + 1))


def _ngrams(words: Sequence[str]) -> set[tuple[str, ...]]:
    return {tuple(words[i:j]) for i in range(len(words)) for j in range(i + 1, len(words) + 1)}


def match_column_mention(
    q: Question, header, exclude: Optional[set[int]] = None
) -> Optional[Span]:
    """Longest question span equal (after stemming) to a contiguous piece of the header.

    Ties go to the earliest start. Partial pieces made only of stopwords are
    not considered mentions.
    """
    head = [stem(w) for w in header.tokens]
    full = tuple(head)
    pieces = {g for g in _ngrams(head) if g == full or not all(w in STOPWORDS for w in g)}
    words = [stem(w) for w in q.words]
    for length in range(min(len(head), len(words)), 0, -1):
        for start in range(len(words) - length + 1):
            span = (start, start + length - 1)
            if tuple(words[start : start + length]) in pieces and _free(span, exclude):
                return span
    return None


def _values_match(text: str, target: str) -> bool:
    a = normalize_value(text)
    if a == target:
        return True
    x, y = parse_number(a), parse_number(target)
    return x is not None and y is not None and x == y


def match_value_span(q: Question, value: str, exclude: Optional[set[int]] = None) -> Optional[Span]:
    """Earliest token span whose text equals ``value`` after normalization (numerically, if both parse)."""
    target = normalize_value(value)
    if not target:
        return None
    words = q.words
    for start in range(len(words)):
        for end in range(start, len(words)):
            span = (start, end)
            if not _free(span, exclude):
                break
            joined = " ".join(words[start : end + 1])
            if _values_match(joined, target) or _values_match(q.span_text(start, end), target):
                return span
    return None


def match_phrase_span(
    q: Question, phrases: Iterable[tuple[str, ...]], exclude: Optional[set[int]] = None
) -> Optional[Span]:
    """Earliest occurrence of any phrase, trying longer phrases before shorter ones."""
    words = q.words
    by_len: dict[int, list[tuple[str, ...]]] = {}
    for p in phrases:
        by_len.setdefault(len(p), []).append(p)
    for length in sorted(by_len, reverse=True):
        options = set(by_len[length])
        for start in range(len(words) - length + 1):
            span = (start, start + length - 1)
            if tuple(words[start : start + length]) in options and _free(span, exclude):
                return span
    return None


def match_operator_span(
    q: Question, op: CondOp, lexicon: Optional[Lexicon] = None, exclude: Optional[set[int]] = None
) -> Optional[Span]:
    lexicon = lexicon or default_lexicon()
    return match_phrase_span(q, lexicon.get(op.name), exclude)


def match_agg_trigger(
    q: Question, agg: AggFn, lexicon: Optional[Lexicon] = None, exclude: Optional[set[int]] = None
) -> Optional[Span]:
    if agg == AggFn.NONE:
        return None
    lexicon = lexicon or default_lexicon()
    return match_phrase_span(q, lexicon.get(agg.name), exclude)


@dataclass(frozen=True)
class CondCoverage:
    w_col: bool
    w_op: bool
    w_val: bool


@dataclass(frozen=True)
class Coverage:
    s_col: bool
    s_agg: bool
    agg_expected: bool
    conds: tuple[CondCoverage, ...] = ()

    @property
    def complete(self) -> bool:
        return (
            self.s_col
            and (self.s_agg or not self.agg_expected)
            and all(c.w_col and c.w_op and c.w_val for c in self.conds)
        )

    def to_json(self) -> dict:
        return {
            "s_col": self.s_col,
            "s_agg": self.s_agg,
            "agg_expected": self.agg_expected,
            "conds": [{"w_col": c.w_col, "w_op": c.w_op, "w_val": c.w_val} for c in self.conds],
        }


@dataclass(frozen=True)
class AnnotationResult:
    graph: DependencyGraph
    coverage: Coverage
    value_spans: tuple[Optional[Span], ...] = field(default=())

    def to_json(self) -> dict:
        return {"edges": self.graph.to_json(), "coverage": self.coverage.to_json()}


def annotate(ex: Example, schema: Schema, lexicon: Optional[Lexicon] = None) -> AnnotationResult:
    """Build the gold dependency graph for one example.

    Spans are claimed greedily so that no token links twice: condition values
    first (exact literals), then the select column, condition columns, the
    aggregation trigger and finally operator phrases, each in gold order.
    Every token of a claimed span links to the relevant header.
    """
    lexicon = lexicon or default_lexicon()
    q, gold = ex.question, ex.gold
    n = q.n
    labels: dict[tuple[int, int], DepLabel] = {}
    claimed: set[int] = set()

    def link(span: Optional[Span], col: int, label: DepLabel) -> bool:
        if span is None:
            return False
        for i in range(span[0], span[1] + 1):
            labels[(i, n + col)] = label
            claimed.add(i)
        return True

    value_spans = []
    w_val = []
    for c in gold.conds:
        span = match_value_span(q, c.value, claimed)
        value_spans.append(span)
        w_val.append(link(span, c.col, DepLabel.W_VAL))

    sel_header = schema.headers[gold.sel_col]
    s_col = link(match_column_mention(q, sel_header, claimed), gold.sel_col, DepLabel.S_COL)

    w_col = [
        link(match_column_mention(q, schema.headers[c.col], claimed), c.col, DepLabel.W_COL)
        for c in gold.conds
    ]
    s_agg = link(match_agg_trigger(q, gold.agg, lexicon, claimed), gold.sel_col, DepLabel.S_AGG)
    w_op = [
        link(match_operator_span(q, c.op, lexicon, claimed), c.col, DepLabel.W_OP)
        for c in gold.conds
    ]

    coverage = Coverage(
        s_col=s_col,
        s_agg=s_agg,
        agg_expected=gold.agg != AggFn.NONE,
        conds=tuple(CondCoverage(*flags) for flags in zip(w_col, w_op, w_val)),
    )
    graph = DependencyGraph(n, schema.m, labels)
    return AnnotationResult(graph, coverage, tuple(value_spans))


def dump_annotations(path, results: Iterable[AnnotationResult]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_json()) + "\n")
