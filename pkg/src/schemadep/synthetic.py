"""Templated synthetic corpus: small random tables with questions that mention every slot."""

from __future__ import annotations

import random
from typing import Optional

from .annotate import annotate
from .data import Example, Table, make_question
from .sql import AggFn, Condition, CondOp, SqlSketch

REAL_COLUMNS = [
    "Attendance", "Game", "Points", "Rank", "Year", "Goals", "Wins", "Losses", "Votes",
    "Population", "Area", "Height", "Laps", "Grid", "Round", "Pick", "Age", "Capacity",
    "Crowd", "Draws", "Tries", "Matches", "Seats", "Episodes",
]
TEXT_COLUMNS = [
    "Team", "Opponent", "Location", "Venue", "Player", "Country", "Position", "School",
    "City", "Director", "Title", "Party", "Home Team", "Away Team", "Result", "Club",
    "Nationality", "Surface", "Driver", "Constructor", "Network", "Genre", "Coach", "Status",
]
TEXT_VALUES = [
    "boston", "chicago", "dallas", "denver", "detroit", "houston", "miami", "phoenix",
    "seattle", "toronto", "new york", "los angeles", "san jose", "red hawks", "blue jays",
    "lions", "tigers", "eagles", "falcons", "sharks", "wolves", "ravens", "clay", "grass",
    "carpet", "drama", "comedy", "smith", "jones", "garcia", "miller", "davis", "lopez",
    "wilson", "moore", "taylor", "anderson", "thomas", "jackson", "white", "harris",
    "martin", "thompson", "robinson", "clark", "lewis", "walker", "hall", "allen", "young",
    "king", "wright", "scott", "green", "baker", "adams", "nelson", "hill", "campbell",
    "mitchell", "roberts", "carter", "phillips", "evans", "turner", "torres", "parker",
    "collins", "edwards", "stewart", "morris", "murphy", "cook", "rogers", "morgan",
    "peterson", "cooper", "reed", "bailey", "bell", "gomez", "kelly", "howard", "ward",
    "cox", "diaz", "richardson", "wood", "watson", "brooks", "bennett", "gray", "james",
    "reyes", "cruz", "hughes", "price", "myers", "long", "foster", "sanders", "ross",
    "morales", "powell", "sullivan", "russell", "ortiz", "jenkins", "gutierrez", "perry",
    "butler", "barnes", "fisher", "henderson", "coleman", "simmons", "patterson", "jordan",
    "active", "retired", "pending", "canada", "france", "brazil", "kenya", "norway", "peru",
    "spain", "japan", "chile", "egypt", "italy", "nbc", "abc", "fox", "hbo", "pbs",
]
DIRTY_CELLS = ["n/a", "tbd", "unknown", "--", "none"]

SELECT_TEMPLATES = {
    AggFn.NONE: ["what is the {col}", "what was the {col}", "which {col}", "name the {col}", "tell me the {col}"],
    AggFn.AVG: ["what is the average {col}", "what was the average {col}", "what is the mean {col}"],
    AggFn.SUM: ["what is the total {col}", "what was the total {col}", "what is the sum {col}"],
    AggFn.COUNT: ["how many {col}", "what is the number of {col}", "count the {col}"],
    AggFn.MAX: ["what is the highest {col}", "what was the largest {col}", "what is the maximum {col}"],
    AggFn.MIN: ["what is the lowest {col}", "what was the smallest {col}", "what is the minimum {col}"],
}
COND_TEMPLATES = {
    CondOp.EQ: ["the {col} is {val}", "{col} is {val}", "{col} equals {val}", "the {col} is equal to {val}"],
    CondOp.GT: [
        "the {col} was higher than {val}", "{col} is more than {val}", "{col} is greater than {val}",
        "the {col} is larger than {val}", "{col} over {val}", "{col} above {val}",
        "the {col} was bigger than {val}",
    ],
    CondOp.LT: [
        "the {col} is less than {val}", "{col} is lower than {val}", "the {col} was smaller than {val}",
        "{col} under {val}", "{col} below {val}", "{col} is fewer than {val}",
    ],
}
CONNECTORS = [", when ", " when ", " where ", " with ", " for ", " if "]
N_CONDS_WEIGHTS = [0.15, 0.5, 0.3, 0.05]


def _number_text(value: int, rng: random.Random) -> str:
    if value >= 1000 and rng.random() < 0.5:
        return f"{value:,}"
    return str(value)


def _random_table(rng: random.Random, table_id: str) -> Table:
    n_cols = rng.randint(3, 6)
    n_real = rng.randint(1, n_cols - 1)
    real = rng.sample(REAL_COLUMNS, n_real)
    text = rng.sample(TEXT_COLUMNS, n_cols - n_real)
    cols = [(c, "real") for c in real] + [(c, "text") for c in text]
    rng.shuffle(cols)
    n_rows = rng.randint(5, 20)
    rows = []
    for _ in range(n_rows):
        row = []
        for _, kind in cols:
            if kind == "real":
                scale = rng.choice([100, 1000, 100000])
                row.append(str(rng.randint(1, scale)))
            else:
                row.append(rng.choice(TEXT_VALUES).title())
        rows.append(row)
    return Table.build(table_id, [c for c, _ in cols], [k for _, k in cols], rows)


def _random_example(rng: random.Random, table: Table) -> Optional[Example]:
    headers = table.schema.headers
    m = len(headers)
    real_cols = [i for i, h in enumerate(headers) if h.col_type.value == "real"]
    n_conds = rng.choices(range(len(N_CONDS_WEIGHTS)), N_CONDS_WEIGHTS)[0]
    n_conds = min(n_conds, m - 1)
    sel = rng.randrange(m)
    if sel in real_cols:
        agg = rng.choice(list(AggFn))
    else:
        agg = rng.choice([AggFn.NONE, AggFn.NONE, AggFn.COUNT])
    others = [i for i in range(m) if i != sel]
    cond_cols = rng.sample(others, n_conds)
    row = rng.choice(table.rows)

    conds = []
    phrases = []
    for col in cond_cols:
        cell = row[col]
        if col in real_cols:
            try:
                number = int(cell)
            except ValueError:
                return None
            op = rng.choice(list(CondOp))
            if op == CondOp.GT:
                number = max(0, number - rng.randint(1, 10))
            elif op == CondOp.LT:
                number = number + rng.randint(1, 10)
            value_text = _number_text(number, rng)
            gold_value = str(number)
        else:
            op = CondOp.EQ
            value_text = cell
            gold_value = cell
        conds.append(Condition(col, op, gold_value))
        template = rng.choice(COND_TEMPLATES[op])
        phrases.append(template.format(col=headers[col].name.lower(), val=value_text))

    text = rng.choice(SELECT_TEMPLATES[agg]).format(col=headers[sel].name.lower())
    if phrases:
        text += rng.choice(CONNECTORS) + " and ".join(phrases)
    text = text[0].upper() + text[1:] + "?"
    gold = SqlSketch(sel, agg, tuple(conds))
    return Example(make_question(text), table.id, gold)


def generate_synthetic(
    n: int, seed: int = 0, dirty_rate: float = 0.0, examples_per_table: int = 3, prefix: str = "syn"
) -> tuple[list[Example], dict[str, Table]]:
    """``n`` examples over freshly generated tables, deterministic under ``seed``.

    Every example is kept only if the annotator finds all of its expected
    links. With ``dirty_rate`` > 0 that fraction of real-typed cells is
    replaced by junk strings after the questions are drawn, so gold queries
    may then hit run-time errors.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    tables: dict[str, Table] = {}
    examples: list[Example] = []
    while len(examples) < n:
        table = _random_table(rng, f"{prefix}-{seed}-{len(tables)}")
        tables[table.id] = table
        made = 0
        for _ in range(20 * examples_per_table):
            if made == examples_per_table or len(examples) == n:
                break
            ex = _random_example(rng, table)
            if ex is None or not annotate(ex, table.schema).coverage.complete:
                continue
            examples.append(ex)
            made += 1
    if dirty_rate > 0:
        tables = {tid: _dirty_copy(t, rng, dirty_rate) for tid, t in tables.items()}
    return examples, tables


def _dirty_copy(table: Table, rng: random.Random, rate: float) -> Table:
    kinds = [h.col_type.value for h in table.schema.headers]
    rows = [
        [rng.choice(DIRTY_CELLS) if k == "real" and rng.random() < rate else c for c, k in zip(row, kinds)]
        for row in table.rows
    ]
    return Table.build(table.id, table.schema.names, kinds, rows)
