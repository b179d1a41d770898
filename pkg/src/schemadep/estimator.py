"""Estimator-style wrapper around training, prediction and checkpoints."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

from .annotate import AnnotationResult, Lexicon, annotate
from .data import Example, Table
from .diffgraph import load_checkpoint, save_checkpoint
from .evaluation import evaluation_report, ex_accuracy, lf_accuracy
from .guided import predict_sketch
from .model import EG_DEFAULT, BeamWidths, ModelConfig, ModelParams, Vocab
from .sql import SqlSketch
from .train import EpochMetrics, TrainConfig, train

log = logging.getLogger(__name__)

FORMAT = "schemadep-model/1"


def check_examples(X, tables: Optional[Mapping[str, Table]] = None) -> list[Example]:
    """Validate a sequence of examples, and that each table id resolves when ``tables`` is given."""
    if isinstance(X, Example):
        raise TypeError("expected a sequence of Example objects, got a single Example")
    try:
        examples = list(X)
    except TypeError:
        raise TypeError(f"expected a sequence of Example objects, got {type(X).__name__}") from None
    for i, ex in enumerate(examples):
        if not isinstance(ex, Example):
            raise TypeError(f"item {i} is {type(ex).__name__}, not Example")
        if tables is not None and ex.table_id not in tables:
            raise KeyError(f"item {i}: unknown table id {ex.table_id!r}")
    return examples


def check_tables(tables) -> Mapping[str, Table]:
    if tables is None:
        raise ValueError("tables are required")
    if not isinstance(tables, Mapping):
        raise TypeError("tables must map table id to Table")
    for key, table in tables.items():
        if not isinstance(table, Table):
            raise TypeError(f"tables[{key!r}] is {type(table).__name__}, not Table")
    return tables


class DependencyAnnotator(TransformerMixin, BaseEstimator):
    """Stateless transformer turning examples into heuristic dependency annotations."""

    def __init__(self, lexicon_path: Union[str, Path, None] = None):
        self.lexicon_path = lexicon_path

    def fit(self, X=None, y=None, **fit_params):
        self.lexicon_ = Lexicon.load(self.lexicon_path)
        return self

    def transform(self, X, tables: Optional[Mapping[str, Table]] = None) -> list[AnnotationResult]:
        check_is_fitted(self, "lexicon_")
        tables = check_tables(tables)
        examples = check_examples(X, tables)
        return [annotate(ex, tables[ex.table_id].schema, self.lexicon_) for ex in examples]


class SchemaDependencyParser(BaseEstimator):
    """Text-to-SQL sketch parser trained jointly with schema dependency prediction.

    ``loss_mode`` selects the objective: ``"adaptive"`` (learned task
    weights), ``"fixed"`` (``fixed_weights`` on the two losses) or
    ``"sql"`` (dependency loss disabled).
    """

    def __init__(
        self,
        epochs: int = 30,
        seed: int = 0,
        lr_sql: float = 1e-3,
        lr_dep: float = 1e-3,
        final_lr_frac: float = 0.1,
        loss_mode: str = "adaptive",
        fixed_weights: tuple = (1.0, 1.0),
        d_emb: int = 128,
        d_h: int = 128,
        d_dep: int = 128,
        d_biaff: int = 128,
        d_att: int = 128,
        d_wn: int = 64,
        rare_count: int = 1,
        unk_prob: float = 0.5,
        eg: bool = False,
        beam_widths: Union[str, Sequence[int], None] = None,
        exclude_empty: bool = False,
        lexicon_path: Union[str, Path, None] = None,
    ):
        self.epochs = epochs
        self.seed = seed
        self.lr_sql = lr_sql
        self.lr_dep = lr_dep
        self.final_lr_frac = final_lr_frac
        self.loss_mode = loss_mode
        self.fixed_weights = fixed_weights
        self.d_emb = d_emb
        self.d_h = d_h
        self.d_dep = d_dep
        self.d_biaff = d_biaff
        self.d_att = d_att
        self.d_wn = d_wn
        self.rare_count = rare_count
        self.unk_prob = unk_prob
        self.eg = eg
        self.beam_widths = beam_widths
        self.exclude_empty = exclude_empty
        self.lexicon_path = lexicon_path

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            seed=self.seed,
            lr_sql=self.lr_sql,
            lr_dep=self.lr_dep,
            final_lr_frac=self.final_lr_frac,
            loss_mode=self.loss_mode,
            fixed_weights=tuple(self.fixed_weights),
            rare_count=self.rare_count,
            unk_prob=self.unk_prob,
        )

    def _model_config(self) -> ModelConfig:
        return ModelConfig(
            d_emb=self.d_emb,
            d_h=self.d_h,
            d_dep=self.d_dep,
            d_biaff=self.d_biaff,
            d_att=self.d_att,
            d_wn=self.d_wn,
            seed=self.seed,
        )

    def _widths(self) -> BeamWidths:
        w = self.beam_widths
        if w is None:
            return EG_DEFAULT
        if isinstance(w, BeamWidths):
            return w
        if isinstance(w, str):
            return BeamWidths.parse(w)
        return BeamWidths(*w)

    def fit(
        self,
        X,
        y=None,
        *,
        tables: Mapping[str, Table],
        dev=None,
        dev_tables: Optional[Mapping[str, Table]] = None,
        metrics_path: Union[str, Path, None] = None,
        checkpoint_dir: Union[str, Path, None] = None,
        checkpoint_interval: int = 0,
    ):
        """Train on examples ``X``; ``y`` (gold sketches) overrides the examples' own gold if given.

        With ``dev`` set, dev LF and EX (greedy decoding) are logged after each epoch.
        """
        tables = check_tables(tables)
        examples = check_examples(X, tables)
        if not examples:
            raise ValueError("cannot fit on an empty dataset")
        if y is not None:
            y = list(y)
            if len(y) != len(examples):
                raise ValueError(f"{len(y)} targets for {len(examples)} examples")
            examples = [Example(ex.question, ex.table_id, g) for ex, g in zip(examples, y)]
        evaluate = None
        if dev is not None:
            dev_tables = check_tables(dev_tables if dev_tables is not None else tables)
            dev_examples = check_examples(dev, dev_tables)

            def evaluate(params: ModelParams) -> tuple[float, float]:
                preds = [predict_sketch(params, ex.question, dev_tables[ex.table_id]) for ex in dev_examples]
                golds = [ex.gold for ex in dev_examples]
                return lf_accuracy(preds, golds), ex_accuracy(
                    preds, golds, [dev_tables[ex.table_id] for ex in dev_examples]
                )

        config = self._train_config()
        config.checkpoint_interval = checkpoint_interval
        checkpoint = None
        if checkpoint_dir is not None and checkpoint_interval > 0:

            def checkpoint(params: ModelParams, epoch: int) -> None:
                self.params_ = params
                self.save(Path(checkpoint_dir) / f"epoch-{epoch:03d}")

        self.lexicon_ = Lexicon.load(self.lexicon_path)
        params, history = train(
            examples,
            tables,
            config,
            self._model_config(),
            evaluate=evaluate,
            metrics_path=metrics_path,
            checkpoint=checkpoint,
            lexicon=self.lexicon_,
        )
        self.params_: ModelParams = params
        self.history_: list[EpochMetrics] = history
        self.n_parameters_ = params.n_parameters()
        return self

    def predict_one(self, example: Example, table: Table, eg: Optional[bool] = None) -> SqlSketch:
        check_is_fitted(self, "params_")
        use_eg = self.eg if eg is None else eg
        return predict_sketch(
            self.params_, example.question, table, use_eg, self._widths(), self.exclude_empty
        )

    def predict(self, X, *, tables: Mapping[str, Table], eg: Optional[bool] = None) -> list[SqlSketch]:
        check_is_fitted(self, "params_")
        tables = check_tables(tables)
        examples = check_examples(X, tables)
        return [self.predict_one(ex, tables[ex.table_id], eg) for ex in examples]

    def score(self, X, y=None, *, tables: Mapping[str, Table], eg: Optional[bool] = None) -> float:
        """Logical-form accuracy against ``y`` or, by default, the examples' gold sketches."""
        examples = check_examples(X, tables)
        golds = [ex.gold for ex in examples] if y is None else list(y)
        return lf_accuracy(self.predict(examples, tables=tables, eg=eg), golds)

    def report(self, X, *, tables: Mapping[str, Table], eg: Optional[bool] = None) -> dict:
        examples = check_examples(X, tables)
        return evaluation_report(self.predict(examples, tables=tables, eg=eg), examples, tables)

    def save(self, directory: Union[str, Path]) -> Path:
        check_is_fitted(self, "params_")
        meta = {
            "format": FORMAT,
            "estimator": self.get_params(),
            "model": self.params_.config.to_json(),
            "vocab": self.params_.vocab.itos,
        }
        meta["estimator"]["lexicon_path"] = None if self.lexicon_path is None else str(self.lexicon_path)
        meta["estimator"]["fixed_weights"] = list(self.fixed_weights)
        if not isinstance(self.beam_widths, (str, type(None))):
            meta["estimator"]["beam_widths"] = list(self._widths().as_tuple())
        save_checkpoint(directory, self.params_.arrays(), meta)
        return Path(directory)

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "SchemaDependencyParser":
        arrays, meta = load_checkpoint(directory)
        if meta.get("format") != FORMAT:
            raise ValueError(f"{directory}: unrecognised model format {meta.get('format')!r}")
        kwargs = dict(meta["estimator"])
        # JSON turns tuples into lists
        for key in ("fixed_weights", "beam_widths"):
            if isinstance(kwargs.get(key), list):
                kwargs[key] = tuple(kwargs[key])
        est = cls(**kwargs)
        vocab = Vocab(w for w in meta["vocab"] if w not in Vocab().stoi)
        if vocab.itos != meta["vocab"]:
            raise ValueError(f"{directory}: vocabulary does not start with the reserved tokens")
        params = ModelParams(ModelConfig(**meta["model"]), vocab)
        params.load_arrays(arrays)
        est.params_ = params
        est.lexicon_ = Lexicon.load(est.lexicon_path)
        est.history_ = []
        est.n_parameters_ = params.n_parameters()
        return est


__all__ = [
    "DependencyAnnotator",
    "NotFittedError",
    "SchemaDependencyParser",
    "check_examples",
    "check_tables",
]
