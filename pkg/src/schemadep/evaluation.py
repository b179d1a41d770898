"""Accuracy metrics and inference timing."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

from .data import Example, Table
from .execution import execute, outcomes_match
from .sql import SqlSketch, normalize_value, sketch_eq_lf

SUBMODULES = ("s_col", "s_agg", "w_no", "w_col", "w_op", "w_val")


def _check_lengths(preds: Sequence, golds: Sequence) -> None:
    if len(preds) != len(golds):
        raise ValueError(f"{len(preds)} predictions for {len(golds)} gold sketches")


def lf_accuracy(preds: Sequence[SqlSketch], golds: Sequence[SqlSketch], strict: bool = False) -> float:
    """Fraction of logical-form matches.

    ``strict`` demands identical sketches (same condition order and value
    spelling) instead of order-insensitive normalized comparison.
    """
    _check_lengths(preds, golds)
    if not golds:
        return 0.0
    same = (lambda a, b: a == b) if strict else sketch_eq_lf
    return sum(same(p, g) for p, g in zip(preds, golds)) / len(golds)


def ex_accuracy(
    preds: Sequence[SqlSketch], golds: Sequence[SqlSketch], tables: Sequence[Table]
) -> float:
    """Fraction of pairs whose executions agree; ``tables[i]`` is the table of pair ``i``."""
    _check_lengths(preds, golds)
    _check_lengths(tables, golds)
    if not golds:
        return 0.0
    hits = sum(
        outcomes_match(execute(p, t), execute(g, t)) for p, g, t in zip(preds, golds, tables)
    )
    return hits / len(golds)


def _pairs(sk: SqlSketch, which: str) -> Counter:
    if which == "col":
        return Counter(c.col for c in sk.conds)
    if which == "op":
        return Counter((c.col, int(c.op)) for c in sk.conds)
    return Counter((c.col, normalize_value(c.value)) for c in sk.conds)


def submodule_accuracy(preds: Sequence[SqlSketch], golds: Sequence[SqlSketch]) -> dict[str, float]:
    _check_lengths(preds, golds)
    total = max(len(golds), 1)
    hits = dict.fromkeys(SUBMODULES, 0)
    for p, g in zip(preds, golds):
        hits["s_col"] += p.sel_col == g.sel_col
        hits["s_agg"] += p.agg == g.agg
        hits["w_no"] += len(p.conds) == len(g.conds)
        hits["w_col"] += _pairs(p, "col") == _pairs(g, "col")
        hits["w_op"] += _pairs(p, "op") == _pairs(g, "op")
        hits["w_val"] += _pairs(p, "val") == _pairs(g, "val")
    return {k: v / total for k, v in hits.items()}


def evaluation_report(
    preds: Sequence[SqlSketch], examples: Sequence[Example], tables: Mapping[str, Table]
) -> dict:
    golds = [ex.gold for ex in examples]
    resolved = [tables[ex.table_id] for ex in examples]
    return {
        "lf": lf_accuracy(preds, golds),
        "ex": ex_accuracy(preds, golds, resolved),
        "submodules": submodule_accuracy(preds, golds),
        "n": len(golds),
    }


@dataclass
class TimingReport:
    total_s: float
    mean_ms: float
    eg: bool
    n: int
    repeat: int
    runs_s: list[float]

    def to_json(self) -> dict:
        return asdict(self)


def bench_inference(model, examples: Sequence[Example], tables: Mapping[str, Table], eg: bool, repeat: int = 1) -> TimingReport:
    """Wall-clock the per-example pipeline (encode, score, decode, optional EG) one at a time.

    ``model`` is anything with a ``predict_one(example, table, eg)`` method.
    Only the loop over already loaded examples is timed. ``total_s`` and
    ``mean_ms`` average over the ``repeat`` runs.
    """
    if not examples:
        raise ValueError("cannot benchmark an empty dataset")
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    resolved = [tables[ex.table_id] for ex in examples]
    runs = []
    for _ in range(repeat):
        start = time.perf_counter()
        for ex, table in zip(examples, resolved):
            model.predict_one(ex, table, eg=eg)
        runs.append(time.perf_counter() - start)
    total = sum(runs) / repeat
    return TimingReport(total, 1000 * total / len(examples), eg, len(examples), repeat, runs)
