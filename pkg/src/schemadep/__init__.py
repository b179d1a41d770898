"""Sketch-based Text-to-SQL with schema dependency supervision and execution-guided decoding."""

from .annotate import Lexicon, annotate
from .data import Example, Table, load_examples, load_tables
from .estimator import DependencyAnnotator, SchemaDependencyParser
from .evaluation import bench_inference, ex_accuracy, lf_accuracy, submodule_accuracy
from .execution import execute
from .guided import eg_decode, enumerate_candidates
from .sql import AggFn, Condition, CondOp, DependencyGraph, DepLabel, SqlSketch, canonical_sql
from .synthetic import generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "AggFn",
    "CondOp",
    "Condition",
    "DepLabel",
    "DependencyAnnotator",
    "DependencyGraph",
    "Example",
    "Lexicon",
    "SchemaDependencyParser",
    "SqlSketch",
    "Table",
    "annotate",
    "bench_inference",
    "canonical_sql",
    "eg_decode",
    "enumerate_candidates",
    "ex_accuracy",
    "execute",
    "generate_synthetic",
    "lf_accuracy",
    "load_examples",
    "load_tables",
    "submodule_accuracy",
]
