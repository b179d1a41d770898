"""Execution-guided decoding: keep the best-ranked candidate that runs cleanly."""

from __future__ import annotations

from typing import Sequence

from .data import Table
from .execution import execute
from .model import EG_DEFAULT, BeamWidths, SqlScores, enumerate_candidates
from .sql import Question, SqlSketch

__all__ = ["eg_decode", "enumerate_candidates", "EG_DEFAULT", "BeamWidths", "guided_decode"]


def eg_decode(candidates: Sequence[SqlSketch], table: Table, exclude_empty: bool = False) -> SqlSketch:
    """First candidate whose execution raises no run-time error.

    With ``exclude_empty`` set, candidates returning no rows or a NULL
    aggregate are passed over too, unless every clean candidate is empty,
    in which case the first clean one wins. Falls back to the rank-1
    candidate when nothing executes cleanly.
    """
    if not candidates:
        raise ValueError("eg_decode needs at least one candidate")
    first_clean = None
    for cand in candidates:
        outcome = execute(cand, table)
        if not outcome.ok:
            continue
        if exclude_empty and outcome.empty:
            if first_clean is None:
                first_clean = cand
            continue
        return cand
    return candidates[0] if first_clean is None else first_clean


def guided_decode(
    scores: SqlScores,
    question: Question,
    table: Table,
    widths: BeamWidths = EG_DEFAULT,
    exclude_empty: bool = False,
) -> SqlSketch:
    return eg_decode(enumerate_candidates(scores, question, widths), table, exclude_empty)


def predict_sketch(
    params,
    question: Question,
    table: Table,
    eg: bool = False,
    widths: BeamWidths = EG_DEFAULT,
    exclude_empty: bool = False,
) -> SqlSketch:
    """Run the network without recording a graph and decode, optionally execution-guided."""
    from .model import decode_sketch, encode, sql_scores

    scores = sql_scores(encode(question, table.schema, params), params)
    if eg:
        return guided_decode(scores, question, table, widths, exclude_empty)
    return decode_sketch(scores, question)
