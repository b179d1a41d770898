import json

from hypothesis import given, settings, strategies as st

from schemadep.annotate import (
    Lexicon,
    annotate,
    dump_annotations,
    match_column_mention,
    match_operator_span,
    match_value_span,
    stem,
)
from schemadep.data import Example, Table, make_header, make_question
from schemadep.sql import AggFn, Condition, CondOp, DepLabel, SqlSketch
from schemadep.synthetic import generate_synthetic
from conftest import FIG1_LINKS



def test_fig1_links_exact(fig1):
    ex, table = fig1
    result = annotate(ex, table.schema)
    assert ex.question.n == 14
    assert set(result.graph.triples()) == FIG1_LINKS
    assert result.coverage.complete
    assert result.value_spans == ((12, 12),)


def test_stem_rules():
    assert stem("games") == "game"
    assert stem("cities") == "city"
    assert stem("boxes") == "box"
    assert stem("matches") == "match"
    assert stem("class") == "class"
    assert stem("playing") == "play"
    assert stem("scored") == "scor"
    assert stem("is") == "is"


def test_column_mention_single_token():
    q = make_question("What was the average game")
    assert match_column_mention(q, make_header("Game")) == (4, 4)


def test_column_mention_absent():
    q = make_question("What was the average game")
    assert match_column_mention(q, make_header("Source")) is None


def _brute_force_mention(words, header_words):
    pieces = {tuple(header_words[i:j]) for i in range(len(header_words)) for j in range(i + 1, len(header_words) + 1)}
    best = None
    for s in range(len(words)):
        for e in range(s, len(words)):
            if tuple(words[s : e + 1]) in pieces:
                cand = (e - s + 1, -s)
                if best is None or cand > best[0]:
                    best = (cand, (s, e))
    return None if best is None else best[1]


def test_column_mention_longest_beats_partial():
    q = make_question("which team won when the home team scored")
    assert match_column_mention(q, make_header("Home Team")) == (5, 6)
    assert _brute_force_mention([stem(w) for w in q.words], ["home", "team"]) == (5, 6)


@given(st.lists(st.sampled_from(["home", "team", "away", "score", "the", "x"]), min_size=1, max_size=8))
def test_column_mention_agrees_with_brute_force(words):
    q = make_question(" ".join(words))
    header = make_header("Home Team Score")
    assert match_column_mention(q, header) == _brute_force_mention(words, ["home", "team", "score"])


def test_value_span_numeric_with_separator():
    q = make_question("higher than 56,040?")
    assert match_value_span(q, "56040") == (2, 2)


def test_value_span_absent():
    assert match_value_span(make_question("higher than 56,040?"), "boston") is None


def test_value_span_multi_token():
    q = make_question("teams in New York city")
    assert match_value_span(q, "new york") == (2, 3)


@given(
    st.lists(st.sampled_from(["new", "york", "la", "ny", "in"]), min_size=1, max_size=7),
    st.sampled_from(["new york", "york", "la ny", "in"]),
)
def test_value_span_matches_scan_oracle(words, value):
    q = make_question(" ".join(words))
    want = None
    target = value.split()
    for s in range(len(words)):
        for e in range(s, len(words)):
            if words[s : e + 1] == target and want is None:
                want = (s, e)
    assert match_value_span(q, value) == want


def test_operator_gt_fig1():
    q = make_question("What was the average Game, when the attendance was higher than 56,040?")
    assert match_operator_span(q, CondOp.GT) == (10, 11)


def test_operator_absent():
    assert match_operator_span(make_question("what is the game"), CondOp.LT) is None


def test_operator_earliest_multiword():
    q = make_question("more than 5 and larger than 3")
    assert match_operator_span(q, CondOp.GT) == (0, 1)


def test_operator_multiword_before_single():
    q = make_question("over 5 or greater than 3")
    assert match_operator_span(q, CondOp.GT) == (3, 4)


def test_zero_condition_unmentioned_select():
    table = Table.build("t", ["Source", "Game"], ["text", "real"], [])
    ex = Example(make_question("how many are there?"), "t", SqlSketch(0, AggFn.COUNT))
    result = annotate(ex, table.schema)
    assert not result.coverage.s_col
    assert result.coverage.s_agg
    assert {lab for *_, lab in result.graph.triples()} == {DepLabel.S_AGG}


def test_two_conditions_have_disjoint_edges():
    table = Table.build("t", ["Player", "Team", "Goals"], ["text", "text", "real"], [])
    q = make_question("which player when the team is boston and goals more than 10")
    gold = SqlSketch(0, AggFn.NONE, (Condition(1, CondOp.EQ, "boston"), Condition(2, CondOp.GT, "10")))
    result = annotate(Example(q, "t", gold), table.schema)
    n = q.n
    by_head = {}
    for d, h, lab in result.graph.triples():
        by_head.setdefault(h, set()).add((d, lab))
    team, goals = by_head[n + 1], by_head[n + 2]
    assert {d for d, _ in team}.isdisjoint({d for d, _ in goals})
    assert {lab for _, lab in team} == {DepLabel.W_COL, DepLabel.W_OP, DepLabel.W_VAL}
    assert {lab for _, lab in goals} == {DepLabel.W_COL, DepLabel.W_OP, DepLabel.W_VAL}
    assert result.coverage.complete


def test_custom_lexicon_file(tmp_path):
    (tmp_path / "ops.txt").write_text("[GT]\nexceeding\n[AVG]\naverage\n")
    lex = Lexicon.load(tmp_path)
    q = make_question("games exceeding 3")
    assert match_operator_span(q, CondOp.GT, lex) == (1, 1)
    assert lex.get("LT") == ()


def test_dump_format(tmp_path, fig1):
    ex, table = fig1
    path = tmp_path / "ann.jsonl"
    dump_annotations(path, [annotate(ex, table.schema)])
    rec = json.loads(path.read_text())
    assert [4, 14, "S_COL"] in rec["edges"]
    assert rec["coverage"]["conds"] == [{"w_col": True, "w_op": True, "w_val": True}]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_graph_invariants_on_synthetic(seed):
    examples, tables = generate_synthetic(5, seed=seed)
    for ex in examples:
        schema = tables[ex.table_id].schema
        result = annotate(ex, schema)
        n = ex.question.n
        assert result.coverage.complete
        assert result == annotate(ex, schema)
        cond_cols = {c.col for c in ex.gold.conds}
        for d, h, lab in result.graph.triples():
            assert d < n <= h
            if lab in (DepLabel.S_COL, DepLabel.S_AGG):
                assert h - n == ex.gold.sel_col
            else:
                assert h - n in cond_cols
