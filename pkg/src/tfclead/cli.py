"""``tfclead`` command line: generate, prepare, train, tune, evaluate, compare, drift, report.

Every run writes ``<name>.manifest.json`` beside its outputs with the config
hash, input/output hashes and tool version. Errors exit non-zero and print
``tfclead: error[<category>]: <message>`` on stderr.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, evalcmp, synthgen
from ._workers import WORKERS_ENV
from .config import DERIVATIVE_CHOICES, RunConfig, load_config
from .errors import ConfigError, DataError, TfcError
from .features import EncodedDataset, FeatureSet, Vocabulary
from .gbdt import dumps_model, load_model, predict_class, train
from .ingest import parse_csv, partition_by_derivative, validate_and_filter, write_csv
from .labeling import scheme_for
from .pipeline import prepare, split_dataset
from .tune import Grid, grid_search

EXIT_USAGE = 2
EXIT_IO = 7


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_manifest(path: Path, command: str, cfg: RunConfig, inputs: list[Path],
                   outputs: list[Path], primary: list[Path]) -> None:
    manifest = {
        "tool": "tfclead",
        "version": __version__,
        "command": command,
        "config_hash": cfg.digest(),
        "config": cfg.to_json(),
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
        "primary_outputs": [str(p) for p in primary],
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    _write(path, _json(manifest))


def _resolve(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "features", None):
        cfg.features = args.features
    if getattr(args, "derivative", None):
        cfg.derivative = args.derivative
    if getattr(args, "classes", None) is not None:
        cfg.classes = args.classes
    if getattr(args, "grid", None):
        cfg.grid = args.grid
    if getattr(args, "strict", False):
        cfg.strict = True
    if getattr(args, "magnitude", None) is not None:
        cfg.magnitude = args.magnitude
    if getattr(args, "data", None):
        cfg.data = args.data
    gen = {}
    if args.command in ("generate", "drift"):
        if args.seed is not None:
            gen["seed"] = args.seed
        if getattr(args, "n", None) is not None:
            gen["n_vehicles"] = args.n
    elif args.seed is not None:
        cfg.split_seed = args.seed
    if gen:
        cfg.generator = dataclasses.replace(cfg.generator, **gen)
    return cfg.validate()


def _input(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"input not found: {p}")
    return p


def _load_labelled(args, cfg: RunConfig, vocabulary: Vocabulary | None = None):
    """Dataset from ``--dataset`` or freshly prepared from the CSV; returns (dataset, records, inputs, seconds)."""
    t = time.perf_counter()
    scheme = scheme_for(cfg.classes)
    if getattr(args, "dataset", None):
        path = _input(args.dataset)
        ds = EncodedDataset.load(path)
        if getattr(args, "classes", None) is None and ds.scheme is not None:
            cfg.classes = ds.n_classes
        elif ds.scheme != scheme:
            ds = ds.with_labels(scheme)
        return ds, None, [path], time.perf_counter() - t
    path = _input(cfg.data)
    table = parse_csv(path, strict=cfg.strict)
    prepared = prepare(table, cfg.features, scheme, cfg.derivative, vocabulary)
    return prepared.dataset, prepared.table.records, [path], time.perf_counter() - t


def cmd_generate(args, cfg: RunConfig) -> None:
    out = Path(args.out or cfg.data)
    fleet = synthgen.generate_fleet(cfg.generator)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(fleet, out)
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "generate", cfg, [], [out], [out])
    print(f"wrote {len(fleet)} vehicles to {out}")


def cmd_prepare(args, cfg: RunConfig) -> None:
    src = _input(cfg.data)
    table = parse_csv(src, strict=cfg.strict)
    prepared = prepare(table, cfg.features, scheme_for(cfg.classes), cfg.derivative)
    out = Path(args.out or Path(cfg.reports) / "dataset.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    prepared.dataset.save(out)
    report = {"rows_read": table.rows_read, "malformed": [list(m) for m in table.malformed],
              **prepared.filter_report.to_json(), "rows_kept": prepared.dataset.n_rows,
              "n_features": prepared.dataset.n_features}
    rep = _write(out.with_suffix(".filter_report.json"), _json(report))
    write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "prepare", cfg, [src], [out, rep], [out, rep])
    print(f"encoded {prepared.dataset.n_rows} vehicles x {prepared.dataset.n_features} features -> {out}")


def _out_dir(args, default: str) -> Path:
    d = Path(args.out or default)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_train(args, cfg: RunConfig) -> None:
    ds, _, inputs, _ = _load_labelled(args, cfg)
    split, tr, va, te = split_dataset(ds, cfg.split_seed)
    model, report = train(tr, va, cfg.hyperparams)
    out = _out_dir(args, cfg.models)
    model_path = _write(out / "model.json", dumps_model(model))
    split_path = _write(out / "split.json", json.dumps(split.to_json(), separators=(",", ":")) + "\n")
    rep = report.to_json(model.vocabulary)
    rep["test_accuracy"] = float(np.mean(predict_class(model, te) == te.labels))
    report_path = _write(out / "train_report.json", _json(rep))
    write_manifest(out / "train.manifest.json", "train", cfg, inputs,
                   [model_path, split_path, report_path], [model_path, split_path])
    print(f"rounds {report.rounds_completed} ({report.total_trees} trees), "
          f"test accuracy {rep['test_accuracy']:.4f} -> {model_path}")


def cmd_evaluate(args, cfg: RunConfig) -> None:
    model_path = _input(args.model)
    model = load_model(model_path)
    cfg.classes = model.n_classes
    ds, _, inputs, _ = _load_labelled(args, cfg, Vocabulary(model.vocabulary))
    _, _, _, te = split_dataset(ds, cfg.split_seed)
    if te.vocabulary.fingerprint != model.vocabulary_fingerprint:
        raise DataError("dataset vocabulary differs from the model's; pass the CSV via --data instead")
    metrics = evalcmp.evaluate(predict_class(model, te), te.labels, model.n_classes)
    out = _out_dir(args, cfg.reports)
    paths = [
        _write(out / "metrics.json", _json(metrics.to_json())),
        _write(out / "metrics.txt", metrics.text_table(model.scheme.interval_names())),
        _write(out / "confusion.csv", metrics.confusion_csv()),
    ]
    write_manifest(out / "evaluate.manifest.json", "evaluate", cfg, [model_path, *inputs], paths, paths)
    sys.stdout.write(metrics.text_table(model.scheme.interval_names()))


def cmd_tune(args, cfg: RunConfig) -> None:
    ds, _, inputs, _ = _load_labelled(args, cfg)
    result = grid_search(ds, Grid.named(cfg.grid), k=cfg.folds, seed=cfg.split_seed, base=cfg.hyperparams)
    out = _out_dir(args, cfg.reports)
    result.save(out)
    paths = [out / "tune_result.csv", out / "tune_result.json"]
    write_manifest(out / "tune.manifest.json", "tune", cfg, inputs, paths, [paths[0]])
    best = result.best
    print(f"{len(result.records)} combinations; best #{best.combination_id} "
          f"mean accuracy {100 * best.mean:.1f} % ({best.hyperparams.to_dict()})")


def cmd_compare(args, cfg: RunConfig) -> None:
    model = None
    inputs = []
    vocab = None
    if args.model:
        model_path = _input(args.model)
        model = load_model(model_path)
        cfg.classes = model.n_classes
        vocab = Vocabulary(model.vocabulary)
        inputs.append(model_path)
    ds, records, data_inputs, prep_seconds = _load_labelled(argparse.Namespace(dataset=None), cfg, vocab)
    inputs += data_inputs
    split, tr, va, te = split_dataset(ds, cfg.split_seed)
    if model is None:
        model, _ = train(tr, va, cfg.hyperparams)
    baseline = evalcmp.fit_baseline([records[i] for i in split.train], model.scheme)
    cmp = evalcmp.compare_systems(model, baseline, te, [records[i] for i in split.test], prep_seconds)
    out = _out_dir(args, cfg.reports)
    paths = [
        _write(out / "comparison.json", _json(cmp.to_json())),
        _write(out / "comparison.txt", cmp.text_table()),
        _write(out / "baseline.json", _json(baseline.to_json())),
    ]
    write_manifest(out / "compare.manifest.json", "compare", cfg, inputs, paths, paths[2:])
    sys.stdout.write(cmp.text_table())


def cmd_drift(args, cfg: RunConfig) -> None:
    classes = args.classes if args.classes is not None else evalcmp.DRIFT_DEFAULT_CLASSES
    rep = evalcmp.drift_experiment(cfg.generator, cfg.magnitude, scheme_for(classes), cfg.features,
                                   cfg.hyperparams, cfg.split_seed)
    out = _out_dir(args, cfg.reports)
    paths = [_write(out / "drift.json", _json(rep.to_json())), _write(out / "drift.txt", rep.text_table())]
    write_manifest(out / "drift.manifest.json", "drift", cfg, [], paths, paths)
    sys.stdout.write(rep.text_table())


def _class_range(text: str) -> list[int]:
    lo, _, hi = text.partition("-")
    ks = list(range(int(lo), int(hi or lo) + 1))
    if not ks or ks[0] < 2 or ks[-1] > 10:
        raise ConfigError(f"class range must lie within 2-10, got {text!r}")
    return ks


def cmd_report(args, cfg: RunConfig) -> None:
    src = _input(cfg.data)
    table = parse_csv(src, strict=cfg.strict)
    part = partition_by_derivative(validate_and_filter(table)[0])[cfg.derivative.upper()]
    sets = [args.features] if args.features else [FeatureSet.LIMITED, FeatureSet.UNLIMITED]
    rows = evalcmp.accuracy_by_classes(part, _class_range(args.class_range), sets, cfg.hyperparams,
                                       cfg.split_seed)
    out = _out_dir(args, cfg.reports)
    cols = ["feature_set", "classes", "n_features", "accuracy", "macro_f1", "majority_share", "trees"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([r[c] if not isinstance(r[c], float) else repr(r[c]) for c in cols])
    text = io.StringIO()
    text.write(f"{'features':>10} {'classes':>7} {'accuracy':>9} {'macro-F1':>9} {'majority':>9} {'trees':>6}\n")
    for r in rows:
        text.write(f"{r['feature_set']:>10} {r['classes']:>7} {100 * r['accuracy']:>8.1f}%"
                   f" {r['macro_f1']:>9.3f} {100 * r['majority_share']:>8.1f}% {r['trees']:>6}\n")
    paths = [_write(out / "accuracy_by_classes.csv", buf.getvalue()), _write(out / "report.txt", text.getvalue())]
    write_manifest(out / "report.manifest.json", "report", cfg, [src], paths, paths[:1])
    sys.stdout.write(text.getvalue())


COMMANDS = {
    "generate": (cmd_generate, "write a synthetic fleet CSV"),
    "prepare": (cmd_prepare, "filter, one-hot encode and label a fleet CSV"),
    "train": (cmd_train, "train a model on the 80/10/10 split"),
    "tune": (cmd_tune, "grid search with stratified k-fold CV"),
    "evaluate": (cmd_evaluate, "score a model on the test split"),
    "compare": (cmd_compare, "compare the model with the rule-based plan"),
    "drift": (cmd_drift, "process-change and retraining experiment"),
    "report": (cmd_report, "accuracy by class count and feature set (CSV series)"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"tfclead: error[usage]: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration (flags override it)")
    common.add_argument("--seed", type=int,
                        help="generator seed for generate/drift, split seed otherwise (default 42)")
    common.add_argument("--classes", type=int, help="number of lead-time classes, 2..10 (default 2)")
    common.add_argument("--features", choices=[f.value for f in FeatureSet],
                        help="feature availability (default unlimited)")
    common.add_argument("--derivative", choices=DERIVATIVE_CHOICES, help="production line (default all)")
    common.add_argument("--grid", choices=["desk", "full"], help="grid for tune (default desk, 32 combos)")
    common.add_argument("--strict", action="store_true", help="fail on malformed CSV rows")
    common.add_argument("--out", help="output file (generate, prepare) or directory")
    common.add_argument("--data", help="fleet CSV (default from [paths] data)")

    parser = _Parser(
        prog="tfclead",
        description="Lead-time interval prediction pipeline.",
        epilog=f"Worker threads: ${WORKERS_ENV} (default: all cores).",
    )
    parser.add_argument("--version", action="version", version=f"tfclead {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name in ("generate", "drift"):
            p.add_argument("--n", type=int, help="number of vehicles (default 10000)")
        if name in ("train", "tune", "evaluate"):
            p.add_argument("--dataset", help="prepared dataset container instead of --data")
        if name in ("evaluate", "compare"):
            p.add_argument("--model", required=name == "evaluate", help="model file")
        if name == "drift":
            p.add_argument("--magnitude", type=float, help="process change magnitude (default 3.0; 0 = none)")
        if name == "report":
            p.add_argument("--class-range", default="2-10", help="class counts to sweep, e.g. 2-4")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        handler(args, _resolve(args))
    except TfcError as exc:
        sys.stderr.write(f"tfclead: error[{exc.category}]: {exc}\n")
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        sys.stderr.write(f"tfclead: error[io]: {exc}\n")
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
