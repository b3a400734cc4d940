"""Metrics, the frozen rule-based baseline, system comparison and drift runs."""
from __future__ import annotations

import dataclasses
import io
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .features import EncodedDataset, FeatureSet
from .gbdt import BoostedModel, Hyperparams, predict_class
from .ingest import RawTable, VehicleRecord
from .labeling import LabelScheme, assign_label, scheme_for
from .pipeline import fit, prepare, split_dataset
from .split import DEFAULT_SEED
from . import synthgen


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    macro_f1: float
    confusion: np.ndarray  # rows: true class, columns: predicted class

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "f1": self.f1.tolist(),
            "support": self.support.tolist(),
            "confusion": self.confusion.tolist(),
        }

    def confusion_csv(self) -> str:
        k = len(self.support)
        lines = ["true\\pred," + ",".join(str(j) for j in range(k))]
        lines += [f"{i}," + ",".join(str(int(c)) for c in row) for i, row in enumerate(self.confusion)]
        return "\n".join(lines) + "\n"

    def text_table(self, names: Sequence[str] | None = None) -> str:
        names = names or [str(i) for i in range(len(self.support))]
        out = io.StringIO()
        out.write(f"accuracy {self.accuracy:.4f}   macro-F1 {self.macro_f1:.4f}\n")
        out.write(f"{'class':>14} {'support':>8} {'precision':>10} {'recall':>8} {'f1':>8}\n")
        for i, n in enumerate(names):
            out.write(f"{n:>14} {int(self.support[i]):>8} {self.precision[i]:>10.4f}"
                      f" {self.recall[i]:>8.4f} {self.f1[i]:>8.4f}\n")
        return out.getvalue()


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


def evaluate(predictions, labels, n_classes: int) -> Metrics:
    pred = np.asarray(predictions, dtype=np.int64)
    true = np.asarray(labels, dtype=np.int64)
    if pred.shape != true.shape:
        raise DataError(f"length mismatch: {pred.size} predictions vs {true.size} labels")
    if true.size == 0:
        raise DataError("nothing to evaluate")
    if min(pred.min(), true.min()) < 0 or max(pred.max(), true.max()) >= n_classes:
        raise DataError("class index out of range")
    confusion = np.bincount(true * n_classes + pred, minlength=n_classes * n_classes)
    confusion = confusion.reshape(n_classes, n_classes)
    tp = np.diag(confusion).astype(np.float64)
    support = confusion.sum(axis=1)
    precision = _safe_div(tp, confusion.sum(axis=0).astype(np.float64))
    recall = _safe_div(tp, support.astype(np.float64))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return Metrics(
        accuracy=float(tp.sum() / true.size),
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        macro_f1=float(f1.mean()),
        confusion=confusion,
    )


@dataclass(frozen=True)
class RuleBaseline:
    """Plan fixed once at TFC entry from the product key; never refitted."""

    planned: dict[str, int]
    fallback: int
    scheme: LabelScheme

    def to_json(self) -> dict:
        return {"planned": dict(sorted(self.planned.items())), "fallback": self.fallback,
                "scheme": list(self.scheme.boundaries)}


def _records(history: RawTable | Iterable[VehicleRecord]) -> tuple[VehicleRecord, ...]:
    return history.records if isinstance(history, RawTable) else tuple(history)


def fit_baseline(history: RawTable | Iterable[VehicleRecord], scheme: LabelScheme) -> RuleBaseline:
    """Per product key, plan the class of the median historical lead time."""
    records = _records(history)
    if not records:
        raise DataError("baseline needs a non-empty history")
    by_key: dict[str, list[float]] = {}
    for r in records:
        by_key.setdefault(r.product_key, []).append(r.lead_time_days)
    planned = {k: assign_label(float(np.median(v)), scheme) for k, v in by_key.items()}
    fallback = assign_label(float(np.median([r.lead_time_days for r in records])), scheme)
    return RuleBaseline(planned, fallback, scheme)


def baseline_predict(baseline: RuleBaseline, rows: Iterable[VehicleRecord | str]) -> np.ndarray:
    keys = [r if isinstance(r, str) else r.product_key for r in rows]
    return np.array([baseline.planned.get(k, baseline.fallback) for k in keys], dtype=np.int64)


@dataclass(frozen=True)
class Comparison:
    model: Metrics
    baseline: Metrics
    delta_points: float  # accuracy difference in percentage points
    delta_relative_pct: float  # accuracy difference relative to the baseline, in percent
    prep_seconds: float
    classify_seconds: float
    n_vehicles: int

    def to_json(self) -> dict:
        return {
            "n_vehicles": self.n_vehicles,
            "model_accuracy": self.model.accuracy,
            "baseline_accuracy": self.baseline.accuracy,
            "delta_points": self.delta_points,
            "delta_relative_pct": self.delta_relative_pct,
            "prep_plus_classify_seconds": self.prep_seconds + self.classify_seconds,
            "model": self.model.to_json(),
            "baseline": self.baseline.to_json(),
        }

    def text_table(self) -> str:
        return (
            f"vehicles compared        {self.n_vehicles}\n"
            f"rule-based accuracy      {100 * self.baseline.accuracy:6.2f} %\n"
            f"AI-based accuracy        {100 * self.model.accuracy:6.2f} %\n"
            f"delta (points)           {self.delta_points:+6.2f}\n"
            f"delta (relative, %)      {self.delta_relative_pct:+6.2f}\n"
            f"prep + classify time     {self.prep_seconds + self.classify_seconds:6.2f} s\n"
        )


def compare_predictions(model_pred, baseline_pred, labels, n_classes: int,
                        prep_seconds: float = 0.0, classify_seconds: float = 0.0) -> Comparison:
    m = evaluate(model_pred, labels, n_classes)
    b = evaluate(baseline_pred, labels, n_classes)
    points = 100.0 * (m.accuracy - b.accuracy)
    relative = 100.0 * (m.accuracy - b.accuracy) / b.accuracy if b.accuracy > 0 else float("inf")
    return Comparison(m, b, points, relative, prep_seconds, classify_seconds, len(labels))


def compare_systems(model: BoostedModel, baseline: RuleBaseline, test_ds: EncodedDataset,
                    test_records: Sequence[VehicleRecord], prep_seconds: float = 0.0) -> Comparison:
    if test_ds.labels is None or len(test_records) != test_ds.n_rows:
        raise DataError("test rows and records must align and carry labels")
    if baseline.scheme != model.scheme:
        raise DataError("model and baseline use different label schemes")
    t = time.perf_counter()
    pred = predict_class(model, test_ds)
    classify = time.perf_counter() - t
    return compare_predictions(pred, baseline_predict(baseline, test_records), test_ds.labels,
                               model.n_classes, prep_seconds, classify)


def model_accuracy(model: BoostedModel, ds: EncodedDataset) -> float:
    return float(np.mean(predict_class(model, ds) == ds.labels))


@dataclass(frozen=True)
class DriftReport:
    pre_change_accuracy: float  # A0: fresh model on pre-change test split
    stale_accuracy: float  # A1: same model on post-change test split
    retrained_accuracy: float  # A2: model retrained on post-change training split
    magnitude: float
    n_classes: int

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def text_table(self) -> str:
        return (
            f"classes {self.n_classes}, process change magnitude {self.magnitude:g}\n"
            f"A0 pre-change          {100 * self.pre_change_accuracy:6.2f} %\n"
            f"A1 stale model         {100 * self.stale_accuracy:6.2f} %\n"
            f"A2 retrained           {100 * self.retrained_accuracy:6.2f} %\n"
        )


DRIFT_DEFAULT_CLASSES = 3


def drift_experiment(config: synthgen.GeneratorConfig, magnitude: float = 3.0,
                     scheme: LabelScheme | None = None,
                     feature_set: FeatureSet | str = FeatureSet.UNLIMITED,
                     hp: Hyperparams | None = None, split_seed: int = DEFAULT_SEED,
                     workers: int | None = None) -> DriftReport:
    """Train before a process change, score the stale model after it, retrain.

    ``magnitude=0`` leaves the process untouched (control run). The
    post-change fleet is a fresh sample drawn with ``config.seed + 1``.
    """
    scheme = scheme or scheme_for(DRIFT_DEFAULT_CLASSES)
    params = synthgen.calibrate(config)
    pre = RawTable(tuple(synthgen.generate_fleet(config, params)))
    changed = params if magnitude == 0 else synthgen.apply_process_change(params, magnitude, config.seed)
    post_config = dataclasses.replace(config, seed=config.seed + 1)
    post = RawTable(tuple(synthgen.generate_fleet(post_config, changed)))

    before = fit(prepare(pre, feature_set, scheme).dataset, hp, split_seed, workers)
    a0 = model_accuracy(before.model, before.test)

    stale_view = prepare(post, feature_set, scheme, vocabulary=before.train.vocabulary).dataset
    _, _, _, stale_test = split_dataset(stale_view, split_seed)
    a1 = model_accuracy(before.model, stale_test)

    after = fit(prepare(post, feature_set, scheme).dataset, hp, split_seed, workers)
    a2 = model_accuracy(after.model, after.test)
    return DriftReport(a0, a1, a2, float(magnitude), scheme.n_classes)


def accuracy_by_classes(table: RawTable, classes: Iterable[int] = range(2, 11),
                        feature_sets: Iterable[FeatureSet | str] = (FeatureSet.LIMITED, FeatureSet.UNLIMITED),
                        hp: Hyperparams | None = None, split_seed: int = DEFAULT_SEED,
                        workers: int | None = None) -> list[dict]:
    """Test accuracy per (feature set, class count): one row per run."""
    rows = []
    for fs in feature_sets:
        fs = FeatureSet.parse(fs)
        for k in classes:
            scheme = scheme_for(k)
            prepared = prepare(table, fs, scheme)
            t = time.perf_counter()
            fitted = fit(prepared.dataset, hp, split_seed, workers)
            elapsed = time.perf_counter() - t
            test = fitted.test
            m = evaluate(predict_class(fitted.model, test), test.labels, k)
            majority = float(np.bincount(test.labels, minlength=k).max() / test.n_rows)
            rows.append({
                "feature_set": fs.value,
                "classes": k,
                "n_features": prepared.dataset.n_features,
                "accuracy": m.accuracy,
                "macro_f1": m.macro_f1,
                "majority_share": majority,
                "trees": fitted.model.total_trees,
                "train_seconds": elapsed,
            })
    return rows
