"""The network: shared encoder, biaffine dependency scorer and sketch slot heads."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import diffgraph as dg
from .diffgraph import Tensor
from .sql import (
    K_MAX,
    AggFn,
    Condition,
    CondOp,
    DependencyGraph,
    DepLabel,
    Question,
    Schema,
    SqlSketch,
)

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
RESERVED = (PAD, UNK, CLS, SEP)
N_AGG = len(AggFn)
N_OP = len(CondOp)
N_LABEL = len(DepLabel)
MAX_SPAN = 12


class Vocab:
    def __init__(self, words: Iterable[str] = ()):
        self.itos: list[str] = list(RESERVED)
        self.stoi = {w: i for i, w in enumerate(self.itos)}
        for w in words:
            self.add(w)

    def add(self, word: str) -> int:
        if word not in self.stoi:
            self.stoi[word] = len(self.itos)
            self.itos.append(word)
        return self.stoi[word]

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, word: str) -> bool:
        return word in self.stoi

    def ids(self, words: Sequence[str]) -> list[int]:
        unk = self.stoi[UNK]
        return [self.stoi.get(w, unk) for w in words]


@dataclass
class ModelConfig:
    d_emb: int = 128
    d_h: int = 128
    d_dep: int = 128
    d_biaff: int = 128
    d_att: int = 128
    d_wn: int = 64
    # initial edge probability; the edge bias starts at its log-odds
    edge_prior: float = 0.02
    # inverted dropout on encoder inputs and outputs, training only
    dropout: float = 0.0
    emb_std: float = 1.0
    # scale of the identity added to the column-attention matrices at init
    att_identity: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.edge_prior < 1.0:
            raise ValueError("edge_prior must lie strictly between 0 and 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.emb_std <= 0.0:
            raise ValueError("emb_std must be positive")
        if not np.isfinite(self.att_identity):
            raise ValueError("att_identity must be finite")

    def to_json(self) -> dict:
        return asdict(self)


# parameter name prefixes routed to the dependency learning rate
DEP_PREFIX = "dep."


class ModelParams:
    """All trainable tensors, addressable by name."""

    def __init__(self, config: ModelConfig, vocab: Vocab):
        self.config = config
        self.vocab = vocab
        rng = np.random.default_rng(config.seed)
        c = config
        d_enc = 2 * c.d_h
        t: dict[str, Tensor] = {}

        def add(tensor: Tensor) -> Tensor:
            t[tensor.name] = tensor
            return tensor

        def mat(name, *shape):
            return add(dg.glorot(rng, shape, name))

        def bias(name, *shape):
            return add(dg.zeros(shape, name))

        # unit-variance embeddings keep distinct words near-orthogonal from the start
        add(dg.param(rng.normal(0.0, c.emb_std, size=(len(vocab), c.d_emb)), "emb"))
        self.enc = [dg.BiLSTMParams(rng, c.d_emb, c.d_h, "enc.l0"), dg.BiLSTMParams(rng, d_enc, c.d_h, "enc.l1")]
        for layer in self.enc:
            for p in layer.tensors():
                add(p)

        self.dep_lstm = dg.BiLSTMParams(rng, d_enc, c.d_dep, "dep.lstm")
        for p in self.dep_lstm.tensors():
            add(p)
        # edge-head, label-head, edge-dep, label-dep projections, concatenated
        mat("dep.ffn.w", 2 * c.d_dep, 4 * c.d_biaff)
        bias("dep.ffn.b", 4 * c.d_biaff)
        mat("dep.edge.u", 1, c.d_biaff, c.d_biaff)
        mat("dep.edge.w", 2 * c.d_biaff, 1)
        bias("dep.edge.b", 1).data[:] = np.log(c.edge_prior / (1.0 - c.edge_prior))
        mat("dep.label.u", N_LABEL, c.d_biaff, c.d_biaff)
        mat("dep.label.w", 2 * c.d_biaff, N_LABEL)
        bias("dep.label.b", N_LABEL)

        for head in ("sc", "sa", "wc", "wo", "wv"):
            mat(f"sql.{head}.att", d_enc, d_enc).data += c.att_identity * np.eye(d_enc)
        for head in ("sc", "wc", "wo"):
            mat(f"sql.{head}.u_h", d_enc, c.d_att)
            mat(f"sql.{head}.u_q", d_enc, c.d_att)
        mat("sql.sc.w", 2 * c.d_att, 1)
        mat("sql.wc.w", 2 * c.d_att, 1)
        mat("sql.wo.w", 2 * c.d_att, N_OP)
        mat("sql.sa.u_q", d_enc, c.d_att)
        mat("sql.sa.w", c.d_att, N_AGG)

        mat("sql.wn.query", d_enc, 1)
        mat("sql.wn.w_h", d_enc, 2 * c.d_wn)
        mat("sql.wn.w_c", d_enc, 2 * c.d_wn)
        self.wn_lstm = dg.BiLSTMParams(rng, d_enc, c.d_wn, "sql.wn.lstm")
        for p in self.wn_lstm.tensors():
            add(p)
        mat("sql.wn.att", 2 * c.d_wn, 1)
        mat("sql.wn.u_q", 2 * c.d_wn, c.d_att)
        mat("sql.wn.w", c.d_att, K_MAX + 1)

        mat("sql.wv.u_x", d_enc, c.d_att)
        mat("sql.wv.u_h", d_enc, c.d_att)
        mat("sql.wv.u_q", d_enc, c.d_att)
        mat("sql.wv.u_op", N_OP, c.d_att)
        bias("sql.wv.b", c.d_att)
        mat("sql.wv.w", c.d_att, 2)

        # log-variances of the two task losses
        bias("loss.eta", 2)
        self.tensors = t

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __iter__(self):
        return iter(self.tensors.values())

    def names(self) -> list[str]:
        return list(self.tensors)

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self.tensors.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        missing = set(self.tensors) - set(arrays)
        if missing:
            raise ValueError(f"checkpoint lacks tensors: {sorted(missing)}")
        for k, v in arrays.items():
            if k not in self.tensors:
                raise ValueError(f"unexpected tensor {k!r} in checkpoint")
            if v.shape != self.tensors[k].shape:
                raise ValueError(f"tensor {k!r}: shape {v.shape} != {self.tensors[k].shape}")
            self.tensors[k].data = np.array(v, dtype=np.float64)

    def group(self, name: str) -> str:
        return "dep" if name.startswith(DEP_PREFIX) else "sql"

    def n_parameters(self) -> int:
        return sum(t.data.size for t in self.tensors.values())


@dataclass
class EncoderOutput:
    x: Tensor  # (n, 2 d_h)
    h: Tensor  # (m, 2 d_h)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def m(self) -> int:
        return self.h.shape[0]


def encoder_layout(question: Question, schema: Schema) -> list[list[str]]:
    """Token rows fed to the encoder: ``[CLS] q.. [SEP]`` then each header's tokens + ``[SEP]``."""
    rows = [[CLS, *question.words, SEP]]
    rows.extend([*h.tokens, SEP] for h in schema.headers)
    return rows


def _dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator]) -> Tensor:
    if rng is None or rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * dg.constant(keep)


def encode(
    question: Question,
    schema: Schema,
    params: ModelParams,
    word_dropout: Optional[set] = None,
    rng: Optional[np.random.Generator] = None,
) -> EncoderOutput:
    """Two-layer Bi-LSTM over the question row and, independently, each header row.

    Rows run as one right-padded batch; rows never interact, so each header
    is encoded on its own. ``word_dropout`` lists words to replace by
    ``[UNK]``. Passing ``rng`` switches on unit dropout at the configured
    rate; both are training-time regularisers.
    """
    if question.n == 0:
        raise ValueError("cannot encode an empty question")
    if schema.m == 0:
        raise ValueError("schema has no headers")
    rows = encoder_layout(question, schema)
    if word_dropout:
        rows = [[UNK if w in word_dropout else w for w in row] for row in rows]
    lengths = [len(r) for r in rows]
    steps = max(lengths)
    pad = params.vocab.stoi[PAD]
    ids = np.full((len(rows), steps), pad, dtype=np.int64)
    for i, row in enumerate(rows):
        ids[i, : len(row)] = params.vocab.ids(row)
    rate = params.config.dropout
    hidden = _dropout(dg.take(params["emb"], ids), rate, rng)
    finals = None
    for k, layer in enumerate(params.enc):
        if k:
            hidden = _dropout(hidden, rate, rng)
        hidden, finals = dg.bilstm(hidden, lengths, layer)
    x = dg.take(hidden, (0, slice(1, question.n + 1)))
    h = dg.take(finals, slice(1, None))
    return EncoderOutput(_dropout(x, rate, rng), _dropout(h, rate, rng))


@dataclass
class DepScores:
    edge: Tensor  # (n+m, n+m)
    label: Tensor  # (n+m, n+m, 5)


def dep_scores(enc: EncoderOutput, params: ModelParams) -> DepScores:
    """Bi-LSTM over ``[x; h]``, four tanh projections, then biaffine edge and label scores."""
    seq = dg.concat([enc.x, enc.h], axis=0)
    size = seq.shape[0]
    z, _ = dg.bilstm(dg.reshape(seq, (1, size, seq.shape[1])), [size], params.dep_lstm)
    z = dg.reshape(z, (size, z.shape[-1]))
    r = dg.tanh(z @ params["dep.ffn.w"] + params["dep.ffn.b"])
    d = params.config.d_biaff
    edge_head, label_head, edge_dep, label_dep = (
        dg.take(r, (slice(None), slice(k * d, (k + 1) * d))) for k in range(4)
    )
    edge = dg.biaffine(edge_dep, edge_head, params["dep.edge.u"], params["dep.edge.w"], params["dep.edge.b"])
    label = dg.biaffine(
        label_dep, label_head, params["dep.label.u"], params["dep.label.w"], params["dep.label.b"]
    )
    return DepScores(dg.take(edge, (Ellipsis, 0)), label)


def dep_loss(scores: DepScores, gold: DependencyGraph) -> Tensor:
    """Binary cross-entropy on every (dep, head) pair plus label cross-entropy on gold edges."""
    size = scores.edge.shape[0]
    if gold.size != size:
        raise ValueError(f"gold graph covers {gold.size} nodes, scores cover {size}")
    target = np.zeros((size, size))
    triples = gold.triples()
    for d, h, _ in triples:
        target[d, h] = 1.0
    loss = (dg.softplus(scores.edge) - scores.edge * target).sum()
    if triples:
        deps = np.array([t[0] for t in triples])
        heads = np.array([t[1] for t in triples])
        labels = np.array([int(t[2]) for t in triples])
        logp = dg.log_softmax(dg.take(scores.label, (deps, heads)))
        loss = loss - dg.take(logp, (np.arange(len(triples)), labels)).sum()
    return loss


def predict_graph(scores: DepScores, n: int) -> DependencyGraph:
    """Edges where the edge score is non-negative, labelled by the arg-max label score."""
    edge = scores.edge.data
    label = scores.label.data
    labels = {
        (int(i), int(j)): DepLabel(int(label[i, j].argmax())) for i, j in zip(*np.nonzero(edge >= 0))
    }
    return DependencyGraph(n, edge.shape[0] - n, labels)


@dataclass
class SqlScores:
    """Logits of every slot head.

    Shapes: ``sc`` (m,), ``sa`` (m, 6) (aggregation given each candidate
    select column), ``wn`` (K_MAX + 1,), ``wc`` (m,), ``wo`` (m, 3),
    ``wv_start`` / ``wv_end`` (m, 3, n) (value boundaries given column and
    operator).
    """

    sc: Tensor
    sa: Tensor
    wn: Tensor
    wc: Tensor
    wo: Tensor
    wv_start: Tensor
    wv_end: Tensor

    @classmethod
    def from_logits(cls, **arrays) -> "SqlScores":
        return cls(**{k: dg.constant(np.asarray(v, dtype=np.float64)) for k, v in arrays.items()})

    @property
    def m(self) -> int:
        return self.sc.shape[0]

    @property
    def n(self) -> int:
        return self.wv_start.shape[-1]

    @property
    def p_sc(self) -> np.ndarray:
        return _softmax(self.sc.data)

    @property
    def p_sa(self) -> np.ndarray:
        return _softmax(self.sa.data)

    @property
    def p_wn(self) -> np.ndarray:
        return _softmax(self.wn.data)

    @property
    def p_wc(self) -> np.ndarray:
        return _sigmoid(self.wc.data)

    @property
    def p_wo(self) -> np.ndarray:
        return _softmax(self.wo.data)

    @property
    def p_wv_start(self) -> np.ndarray:
        return _softmax(self.wv_start.data)

    @property
    def p_wv_end(self) -> np.ndarray:
        return _softmax(self.wv_end.data)


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def column_attention(enc: EncoderOutput, w_att: Tensor) -> Tensor:
    """Per-header summary of the question: softmax over tokens of ``h W x``, then weighted sum."""
    alpha = dg.softmax(enc.h @ w_att @ dg.transpose(enc.x))
    return alpha @ enc.x


def _column_logits(enc, ctx, params, head):
    feats = dg.concat([enc.h @ params[f"sql.{head}.u_h"], ctx @ params[f"sql.{head}.u_q"]], axis=-1)
    return dg.tanh(feats) @ params[f"sql.{head}.w"]


def sql_scores(enc: EncoderOutput, params: ModelParams) -> SqlScores:
    n, m = enc.n, enc.m
    c = params.config
    d_enc = enc.x.shape[1]

    ctx_sc = column_attention(enc, params["sql.sc.att"])
    sc = dg.reshape(_column_logits(enc, ctx_sc, params, "sc"), (m,))

    ctx_sa = column_attention(enc, params["sql.sa.att"])
    sa = dg.tanh(ctx_sa @ params["sql.sa.u_q"]) @ params["sql.sa.w"]

    # W-Num: attention-pooled schema summary initialises a Bi-LSTM over the question
    pool = dg.softmax(dg.transpose(enc.h @ params["sql.wn.query"]) * (1.0 / np.sqrt(d_enc)))
    summary = pool @ enc.h  # (1, d_enc)
    h0 = dg.transpose(dg.reshape(summary @ params["sql.wn.w_h"], (1, 2, c.d_wn)), (1, 0, 2))
    c0 = dg.transpose(dg.reshape(summary @ params["sql.wn.w_c"], (1, 2, c.d_wn)), (1, 0, 2))
    states, _ = dg.bilstm(dg.reshape(enc.x, (1, n, d_enc)), [n], params.wn_lstm, h0, c0)
    states = dg.reshape(states, (n, 2 * c.d_wn))
    weights = dg.softmax(dg.transpose(states @ params["sql.wn.att"]))
    ctx_wn = weights @ states
    wn = dg.reshape(dg.tanh(ctx_wn @ params["sql.wn.u_q"]) @ params["sql.wn.w"], (K_MAX + 1,))

    ctx_wc = column_attention(enc, params["sql.wc.att"])
    wc = dg.reshape(_column_logits(enc, ctx_wc, params, "wc"), (m,))

    ctx_wo = column_attention(enc, params["sql.wo.att"])
    wo = _column_logits(enc, ctx_wo, params, "wo")

    ctx_wv = column_attention(enc, params["sql.wv.att"])
    d = c.d_att
    pre = (
        dg.reshape(enc.x @ params["sql.wv.u_x"], (1, 1, n, d))
        + dg.reshape(enc.h @ params["sql.wv.u_h"] + ctx_wv @ params["sql.wv.u_q"], (m, 1, 1, d))
        + dg.reshape(params["sql.wv.u_op"], (1, N_OP, 1, d))
        + params["sql.wv.b"]
    )
    bounds = dg.tanh(pre) @ params["sql.wv.w"]  # (m, 3, n, 2)
    return SqlScores(
        sc=sc,
        sa=sa,
        wn=wn,
        wc=wc,
        wo=wo,
        wv_start=dg.take(bounds, (Ellipsis, 0)),
        wv_end=dg.take(bounds, (Ellipsis, 1)),
    )


def sql_loss(
    scores: SqlScores, gold: SqlSketch, value_spans: Sequence[Optional[tuple[int, int]]] = ()
) -> Tensor:
    """Sum of the slot cross-entropies.

    ``value_spans[j]`` is the gold (start, end) of condition ``j``'s value in
    the question, or None when it could not be located (that condition then
    contributes no value loss).
    """
    m = scores.m
    loss = -dg.take(dg.log_softmax(scores.sc), gold.sel_col)
    loss = loss - dg.take(dg.log_softmax(dg.take(scores.sa, gold.sel_col)), int(gold.agg))
    loss = loss - dg.take(dg.log_softmax(scores.wn), len(gold.conds))
    target = np.zeros(m)
    for cond in gold.conds:
        target[cond.col] = 1.0
    loss = loss + (dg.softplus(scores.wc) - scores.wc * target).sum()
    if gold.conds:
        cols = np.array([cd.col for cd in gold.conds])
        ops = np.array([int(cd.op) for cd in gold.conds])
        rows = np.arange(len(cols))
        op_logp = dg.log_softmax(dg.take(scores.wo, cols))
        loss = loss - dg.take(op_logp, (rows, ops)).sum()
        spans = list(value_spans) + [None] * (len(gold.conds) - len(value_spans))
        located = [j for j, s in enumerate(spans) if s is not None]
        if located:
            sel = np.array(located)
            starts = np.array([spans[j][0] for j in located])
            ends = np.array([spans[j][1] for j in located])
            k = np.arange(len(located))
            start_logp = dg.log_softmax(dg.take(scores.wv_start, (cols[sel], ops[sel])))
            end_logp = dg.log_softmax(dg.take(scores.wv_end, (cols[sel], ops[sel])))
            loss = loss - dg.take(start_logp, (k, starts)).sum() - dg.take(end_logp, (k, ends)).sum()
    return loss


# ---------------------------------------------------------------------------
# decoding


@dataclass(frozen=True)
class BeamWidths:
    sel: int = 1
    agg: int = 1
    wnum: int = 1
    wcol: int = 1
    wop: int = 1
    wval: int = 1

    @classmethod
    def parse(cls, text: str) -> "BeamWidths":
        parts = [int(p) for p in text.split(",")]
        if len(parts) != 6:
            raise ValueError("beam widths need six comma-separated integers")
        return cls(*parts)

    def __post_init__(self):
        if min(self.as_tuple()) < 1:
            raise ValueError("beam widths must be >= 1")

    def as_tuple(self) -> tuple[int, ...]:
        return (self.sel, self.agg, self.wnum, self.wcol, self.wop, self.wval)


GREEDY = BeamWidths()
EG_DEFAULT = BeamWidths(2, 2, 2, 2, 2, 2)


def _top(probs: np.ndarray, k: int) -> list[int]:
    """Indices of the k largest entries; ties go to the lower index."""
    order = np.lexsort((np.arange(len(probs)), -probs))
    return [int(i) for i in order[:k]]


def _top_spans(p_start: np.ndarray, p_end: np.ndarray, k: int) -> list[tuple[float, tuple[int, int]]]:
    n = len(p_start)
    cands = [
        (p_start[s] * p_end[e], (s, e)) for s in range(n) for e in range(s, min(n, s + MAX_SPAN))
    ]
    cands.sort(key=lambda c: (-c[0], c[1]))
    return cands[:k]


def _top_column_sets(p_wc: np.ndarray, size: int, k: int) -> list[tuple[float, tuple[int, ...]]]:
    """Best k column subsets of the given size under independent inclusion probabilities.

    Sets are returned with members ordered by descending probability.
    """
    m = len(p_wc)
    order = _top(p_wc, m)
    if size > m:
        return []
    base = np.prod(1.0 - p_wc)
    ratio = {c: p_wc[c] / max(1.0 - p_wc[c], 1e-300) for c in range(m)}
    scored = []
    for combo in itertools.combinations(order, size):
        prob = base
        for col in combo:
            prob *= ratio[col]
        scored.append((prob, tuple(combo)))
    scored.sort(key=lambda c: (-c[0], sorted(c[1])))
    return scored[:k]


def _assignments(options: list[list[tuple[float, object]]], k: int) -> list[tuple[float, tuple]]:
    """Top-k joint choices (one option per slot) by probability product."""
    if not options:
        return [(1.0, ())]
    combos = []
    for choice in itertools.product(*options):
        prob = float(np.prod([c[0] for c in choice]))
        combos.append((prob, tuple(c[1] for c in choice)))
    combos.sort(key=lambda c: -c[0])
    return combos[:k]


def enumerate_candidates(
    scores: SqlScores, question: Question, widths: BeamWidths = GREEDY
) -> list[SqlSketch]:
    """Ranked candidate sketches from per-slot beams.

    Rank 1 is always the slot-wise arg-max sketch; the rest follow by
    descending product of slot probabilities. Candidates equal under
    logical-form comparison are dropped after their first appearance.
    """
    p_sc, p_sa, p_wn = scores.p_sc, scores.p_sa, scores.p_wn
    p_wc, p_wo = scores.p_wc, scores.p_wo
    p_start, p_end = scores.p_wv_start, scores.p_wv_end
    m = scores.m
    span_cache: dict[tuple[int, int], list] = {}

    def spans(col: int, op: int):
        key = (col, op)
        if key not in span_cache:
            span_cache[key] = _top_spans(p_start[col, op], p_end[col, op], widths.wval)
        return span_cache[key]

    scored: list[tuple[float, int, SqlSketch]] = []
    counter = itertools.count()
    for sel in _top(p_sc, widths.sel):
        for agg in _top(p_sa[sel], widths.agg):
            head = p_sc[sel] * p_sa[sel, agg]
            for k in _top(p_wn[: m + 1], widths.wnum):
                for set_p, cols in _top_column_sets(p_wc, k, widths.wcol) if k else [(1.0, ())]:
                    op_opts = [[(p_wo[c, o], o) for o in _top(p_wo[c], widths.wop)] for c in cols]
                    for op_p, ops in _assignments(op_opts, widths.wop):
                        val_opts = [spans(c, o) for c, o in zip(cols, ops)]
                        for val_p, bounds in _assignments(val_opts, widths.wval):
                            conds = tuple(
                                Condition(c, CondOp(o), question.span_text(s, e))
                                for c, o, (s, e) in zip(cols, ops, bounds)
                            )
                            prob = head * p_wn[k] * set_p * op_p * val_p
                            scored.append(
                                (prob, next(counter), SqlSketch(sel, AggFn(agg), conds))
                            )
    greedy = decode_sketch(scores, question)
    rest = sorted(scored, key=lambda s: (-s[0], s[1]))
    ranked = [greedy]
    seen = {_lf_key(greedy)}
    for _, _, sk in rest:
        key = _lf_key(sk)
        if key not in seen:
            seen.add(key)
            ranked.append(sk)
    return ranked


def _lf_key(sk: SqlSketch) -> tuple:
    # equal keys <=> sketch_eq_lf
    return (sk.sel_col, int(sk.agg), tuple(sorted(c.key() for c in sk.conds)))


def decode_sketch(scores: SqlScores, question: Question) -> SqlSketch:
    """Slot-wise arg-max sketch."""
    p_wc = scores.p_wc
    sel = _top(scores.p_sc, 1)[0]
    agg = _top(scores.p_sa[sel], 1)[0]
    # counts above the number of headers are infeasible and never chosen
    k = _top(scores.p_wn[: scores.m + 1], 1)[0]
    conds = []
    for col in _top(p_wc, k):
        op = _top(scores.p_wo[col], 1)[0]
        _, (s, e) = _top_spans(scores.p_wv_start[col, op], scores.p_wv_end[col, op], 1)[0]
        conds.append(Condition(col, CondOp(op), question.span_text(s, e)))
    return SqlSketch(sel, AggFn(agg), tuple(conds))
