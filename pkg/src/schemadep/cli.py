"""Command-line entry point. Reports go to stdout as JSON, logs to stderr."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .annotate import Lexicon, annotate, dump_annotations
from .data import DataError, Example, load_examples, load_tables, make_question, save_examples, save_tables
from .diffgraph import CheckpointError
from .estimator import SchemaDependencyParser
from .evaluation import bench_inference
from .model import BeamWidths
from .sql import SqlSketch, canonical_sql
from .synthetic import generate_synthetic

log = logging.getLogger("schemadep")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad invocation: missing input file or malformed flag value."""


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"no such file or directory: {path}")
    return p


def _widths(text: str) -> BeamWidths:
    try:
        return BeamWidths.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _weights(text: str) -> tuple[float, float]:
    try:
        w = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a pair of numbers: {text!r}") from None
    if len(w) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated weights")
    return w


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def cmd_annotate(args) -> int:
    tables = load_tables(_existing(args.tables))
    examples = load_examples(_existing(args.examples), tables)
    lexicon = Lexicon.load(_existing(args.lexicons) if args.lexicons else None)
    results = [annotate(ex, tables[ex.table_id].schema, lexicon) for ex in examples]
    dump_annotations(args.out, results)
    complete = sum(r.coverage.complete for r in results)
    _emit({
        "n": len(results),
        "complete": complete,
        "coverage": complete / len(results) if results else 0.0,
        "edges": sum(len(r.graph.edges) for r in results),
        "out": str(args.out),
    })
    return EXIT_OK


def cmd_train(args) -> int:
    tables = load_tables(_existing(args.tables))
    examples = load_examples(_existing(args.examples), tables)
    dev = dev_tables = None
    if args.dev:
        dev_tables = load_tables(_existing(args.dev_tables)) if args.dev_tables else tables
        dev = load_examples(_existing(args.dev), dev_tables)
    if args.no_dep:
        mode = "sql"
    elif args.fixed_weights is not None:
        mode = "fixed"
    else:
        mode = "adaptive"
    est = SchemaDependencyParser(
        epochs=args.epochs,
        seed=args.seed,
        loss_mode=mode,
        fixed_weights=args.fixed_weights or (1.0, 1.0),
        d_emb=args.dim,
        d_h=args.dim,
        d_dep=args.dim,
        d_biaff=args.dim,
        d_att=args.dim,
        d_wn=max(1, args.dim // 2),
        lexicon_path=args.lexicons,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    est.fit(
        examples,
        tables=tables,
        dev=dev,
        dev_tables=dev_tables,
        metrics_path=out / "metrics.jsonl",
        checkpoint_dir=out / "checkpoints",
        checkpoint_interval=args.checkpoint_interval,
    )
    est.save(out)
    last = est.history_[-1]
    _emit({"out": str(out), "loss_mode": mode, "epochs": args.epochs, "final": last.to_json()})
    return EXIT_OK


def _load_model(path: str) -> SchemaDependencyParser:
    return SchemaDependencyParser.load(_existing(path))


def cmd_eval(args) -> int:
    model = _load_model(args.model)
    if args.beam_widths is not None:
        model.beam_widths = args.beam_widths.as_tuple()
    tables = load_tables(_existing(args.tables))
    examples = load_examples(_existing(args.examples), tables)
    report = model.report(examples, tables=tables, eg=args.eg)
    report["eg"] = args.eg
    _emit(report)
    return EXIT_OK


def cmd_infer(args) -> int:
    model = _load_model(args.model)
    tables = load_tables(_existing(args.tables))
    if args.table_id not in tables:
        raise DataError(f"unknown table id {args.table_id!r}")
    table = tables[args.table_id]
    question = make_question(args.question)
    if question.n == 0:
        raise DataError("empty question")
    ex = Example(question, table.id, SqlSketch(0))
    sketch = model.predict_one(ex, table, eg=args.eg)
    sys.stdout.write(canonical_sql(sketch, table.schema) + "\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.repeat < 1:
        raise UsageError("--repeat must be >= 1")
    model = _load_model(args.model)
    tables = load_tables(_existing(args.tables))
    examples = load_examples(_existing(args.examples), tables)
    _emit(bench_inference(model, examples, tables, eg=args.eg, repeat=args.repeat).to_json())
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    examples, tables = generate_synthetic(args.n, args.seed, dirty_rate=args.dirty_rate, prefix=args.prefix)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_tables(out / "tables.jsonl", tables.values())
    save_examples(out / "examples.jsonl", examples)
    _emit({"n": len(examples), "tables": len(tables), "out": str(out)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schemadep", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("annotate", help="heuristic dependency graphs and coverage")
    p.add_argument("--examples", required=True)
    p.add_argument("--tables", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lexicons")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--examples", required=True)
    p.add_argument("--tables", required=True)
    p.add_argument("--dev")
    p.add_argument("--dev-tables", help="tables for --dev, default --tables")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=128, help="width of every hidden layer")
    p.add_argument("--no-dep", action="store_true", help="drop the dependency loss")
    p.add_argument("--fixed-weights", type=_weights, help="w_dep,w_sql instead of learned weights")
    p.add_argument("--checkpoint-interval", type=int, default=0)
    p.add_argument("--lexicons")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="LF / EX / sub-module accuracy")
    p.add_argument("--model", required=True)
    p.add_argument("--examples", required=True)
    p.add_argument("--tables", required=True)
    p.add_argument("--eg", action="store_true")
    p.add_argument("--beam-widths", type=_widths)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("infer", help="translate one question")
    p.add_argument("--model", required=True)
    p.add_argument("--question", required=True)
    p.add_argument("--table-id", required=True)
    p.add_argument("--tables", required=True)
    p.add_argument("--eg", action="store_true")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("bench", help="inference timing")
    p.add_argument("--model", required=True)
    p.add_argument("--examples", required=True)
    p.add_argument("--tables", required=True)
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--eg", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--dirty-rate", type=float, default=0.0)
    p.add_argument("--prefix", default="syn")
    p.set_defaults(func=cmd_synth)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as e:
        log.error("%s", e)
        return EXIT_USAGE
    except (DataError, CheckpointError, ValueError, KeyError, OSError) as e:
        log.error("%s", e)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
