"""Joint optimisation of the dependency and SQL losses."""

from __future__ import annotations

import json
import logging
import math
import random
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from . import diffgraph as dg
from .annotate import AnnotationResult, Lexicon, annotate
from .data import Example, Table
from .model import (
    ModelConfig,
    ModelParams,
    Vocab,
    dep_loss,
    dep_scores,
    encode,
    encoder_layout,
    sql_loss,
    sql_scores,
)

log = logging.getLogger(__name__)

LOSS_MODES = ("adaptive", "fixed", "sql")


def adaptive_loss(l_dep, l_sql, eta_dep, eta_sql) -> dg.Tensor:
    """Uncertainty-weighted sum with σ_t = exp(η_t / 2).

    ``exp(-η1)/2 * l_dep + exp(-η2)/2 * l_sql + (η1 + η2)/2``, which equals
    ``l_dep/(2σ1²) + l_sql/(2σ2²) + log(σ1σ2)``.
    """
    return (
        dg.exp(-eta_dep) * l_dep * 0.5
        + dg.exp(-eta_sql) * l_sql * 0.5
        + (eta_dep + eta_sql) * 0.5
    )


class NonFiniteGradient(FloatingPointError):
    pass


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    steps: dict[str, int] = field(default_factory=dict)


def adam_step(
    params: Mapping[str, dg.Tensor],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lrs: Mapping[str, float],
    group_of: Callable[[str], str],
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> AdamState:
    """Bias-corrected Adam update, in place, with a learning rate per parameter group.

    Parameters without a gradient are left untouched. Any non-finite
    gradient aborts the whole step before anything is modified.
    """
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise NonFiniteGradient(f"non-finite gradient for {name!r}")
    b1, b2 = betas
    for name, g in grads.items():
        p = params[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient for {name!r} has shape {g.shape}, expected {p.shape}")
        t = state.steps.get(name, 0) + 1
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(g)
            v = state.v[name] = np.zeros_like(g)
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * (g * g)
        state.steps[name] = t
        denom = np.sqrt(v)
        denom /= math.sqrt(1 - b2**t)
        denom += eps
        step = m / denom
        step *= lrs[group_of(name)] / (1 - b1**t)
        p.data = p.data - step
    return state


def lr_scale(epoch: int, epochs: int, final_frac: float) -> float:
    """Linear decay from 1 at epoch 1 to ``final_frac`` at the last epoch."""
    if epochs <= 1:
        return 1.0
    return 1.0 - (1.0 - final_frac) * (epoch - 1) / (epochs - 1)


@dataclass
class TrainConfig:
    epochs: int = 30
    seed: int = 0
    lr_sql: float = 1e-3
    lr_dep: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    shuffle: bool = True
    checkpoint_interval: int = 0
    loss_mode: str = "adaptive"
    fixed_weights: tuple[float, float] = (1.0, 1.0)
    # words seen at most this often in training are swapped for [UNK] with unk_prob
    rare_count: int = 1
    unk_prob: float = 0.5
    # learning rates shrink linearly to this fraction by the last epoch
    final_lr_frac: float = 0.1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr_sql <= 0 or self.lr_dep <= 0:
            raise ValueError("learning rates must be positive")
        if not 0 < self.final_lr_frac <= 1:
            raise ValueError("final_lr_frac must be in (0, 1]")
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"loss_mode must be one of {LOSS_MODES}")
        self.fixed_weights = tuple(float(w) for w in self.fixed_weights)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class EpochMetrics:
    epoch: int
    l_dep: float
    l_sql: float
    sigma1: float
    sigma2: float
    dev_lf: Optional[float] = None
    dev_ex: Optional[float] = None
    skipped: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def build_vocab(examples: Sequence[Example], tables: Mapping[str, Table]) -> tuple[Vocab, Counter]:
    counts: Counter = Counter()
    for ex in examples:
        for row in encoder_layout(ex.question, tables[ex.table_id].schema):
            counts.update(row)
    vocab = Vocab(sorted(counts))
    return vocab, counts


def example_loss(
    params: ModelParams,
    ex: Example,
    table: Table,
    ann: AnnotationResult,
    config: TrainConfig,
    word_dropout: Optional[set] = None,
    rng: Optional[np.random.Generator] = None,
) -> tuple[dg.Tensor, float, float]:
    """Record one example's objective on the active graph; returns (loss, l_dep, l_sql)."""
    enc = encode(ex.question, table.schema, params, word_dropout, rng)
    l_sql = sql_loss(sql_scores(enc, params), ex.gold, ann.value_spans)
    if config.loss_mode == "sql":
        return l_sql, float("nan"), l_sql.item()
    l_dep = dep_loss(dep_scores(enc, params), ann.graph)
    if config.loss_mode == "fixed":
        w_dep, w_sql = config.fixed_weights
        total = l_dep * w_dep + l_sql * w_sql
    else:
        eta = params["loss.eta"]
        total = adaptive_loss(l_dep, l_sql, dg.take(eta, 0), dg.take(eta, 1))
    return total, l_dep.item(), l_sql.item()


def train(
    examples: Sequence[Example],
    tables: Mapping[str, Table],
    config: TrainConfig = TrainConfig(),
    model_config: Optional[ModelConfig] = None,
    annotations: Optional[Sequence[AnnotationResult]] = None,
    evaluate: Optional[Callable[[ModelParams], tuple[float, float]]] = None,
    metrics_path: Union[str, Path, None] = None,
    checkpoint: Optional[Callable[[ModelParams, int], None]] = None,
    lexicon: Optional[Lexicon] = None,
) -> tuple[ModelParams, list[EpochMetrics]]:
    """Train a fresh model one example per step.

    ``evaluate`` maps the current parameters to (dev LF, dev EX) and is
    called after every epoch. ``checkpoint(params, epoch)`` runs every
    ``config.checkpoint_interval`` epochs when the interval is positive.
    """
    if not examples:
        raise ValueError("cannot train on an empty dataset")
    if annotations is None:
        annotations = [annotate(ex, tables[ex.table_id].schema, lexicon) for ex in examples]
    if len(annotations) != len(examples):
        raise ValueError("every training example needs an annotation")
    model_config = model_config or ModelConfig(seed=config.seed)
    vocab, counts = build_vocab(examples, tables)
    params = ModelParams(model_config, vocab)
    rare = {w for w, c in counts.items() if c <= config.rare_count and not w.startswith("[")}
    rng = random.Random(config.seed)
    mask_rng = np.random.default_rng(config.seed)
    state = AdamState()
    order = list(range(len(examples)))
    history: list[EpochMetrics] = []
    out = open(metrics_path, "w", encoding="utf-8") if metrics_path else None
    try:
        for epoch in range(1, config.epochs + 1):
            if config.shuffle:
                rng.shuffle(order)
            frac = lr_scale(epoch, config.epochs, config.final_lr_frac)
            lrs = {"dep": config.lr_dep * frac, "sql": config.lr_sql * frac}
            dep_sum = sql_sum = 0.0
            skipped = 0
            for i in order:
                ex = examples[i]
                table = tables[ex.table_id]
                words = sorted(rare.intersection(ex.question.words))
                dropout = {w for w in words if rng.random() < config.unk_prob}
                with dg.Graph() as g:
                    loss, l_dep, l_sql = example_loss(
                        params, ex, table, annotations[i], config, dropout, mask_rng
                    )
                grads = dg.backward(g, loss)
                try:
                    adam_step(
                        params.tensors, grads, state, lrs, params.group,
                        (config.beta1, config.beta2), config.adam_eps,
                    )
                except NonFiniteGradient as e:
                    log.warning("skipping example %d (%s): %s", i, ex.table_id, e)
                    skipped += 1
                dg.zero_grad(params)
                dep_sum += 0.0 if math.isnan(l_dep) else l_dep
                sql_sum += l_sql
            eta = params["loss.eta"].data
            metrics = EpochMetrics(
                epoch=epoch,
                l_dep=dep_sum / len(order),
                l_sql=sql_sum / len(order),
                sigma1=float(np.exp(eta[0] / 2)),
                sigma2=float(np.exp(eta[1] / 2)),
                skipped=skipped,
            )
            if evaluate is not None:
                metrics.dev_lf, metrics.dev_ex = evaluate(params)
            history.append(metrics)
            log.info("epoch %d: %s", epoch, metrics.to_json())
            if out is not None:
                out.write(json.dumps(metrics.to_json()) + "\n")
                out.flush()
            if checkpoint is not None and config.checkpoint_interval > 0 and epoch % config.checkpoint_interval == 0:
                checkpoint(params, epoch)
    finally:
        if out is not None:
            out.close()
    return params, history
