"""Exhaustive grid search scored by stratified k-fold accuracy."""
from __future__ import annotations

import csv
import io
import itertools
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_DOWN, Decimal
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _workers
from .errors import ConfigError, DataError
from .features import EncodedDataset
from .gbdt import Hyperparams, predict_class, train
from .split import DEFAULT_SEED, FoldPlan, stratified_kfold, stratified_split

GRID_KEYS = ("learning_rate", "num_leaves", "max_depth", "leaf_estimation_iterations", "leaf_l2_reg")

FULL_GRID = {
    "learning_rate": (0.01, 0.05, 0.1, 0.3),
    "num_leaves": (32, 128, 512, 1024),
    "max_depth": (2, 8, 32, 200),
    "leaf_estimation_iterations": (1, 5, 10),
    "leaf_l2_reg": (1.0, 5.0, 10.0),
}
# Contains the default Hyperparams, so the desk search can never lose to them.
DESK_GRID = {
    "learning_rate": (0.1, 0.3),
    "num_leaves": (32, 128),
    "max_depth": (8, 200),
    "leaf_estimation_iterations": (1, 5),
    "leaf_l2_reg": (1.0, 10.0),
}
GRIDS = {"full": FULL_GRID, "desk": DESK_GRID}


@dataclass(frozen=True)
class Grid:
    values: dict[str, tuple]

    def __post_init__(self):
        unknown = set(self.values) - set(GRID_KEYS)
        if unknown:
            raise ConfigError(f"unknown grid keys {sorted(unknown)}")
        if not self.values or any(len(v) == 0 for v in self.values.values()):
            raise ConfigError("grid must be non-empty")
        for combo in self.combinations(Hyperparams()):
            pass  # Hyperparams validates every value

    def combinations(self, base: Hyperparams | None = None) -> list[Hyperparams]:
        base = base or Hyperparams()
        keys = [k for k in GRID_KEYS if k in self.values]
        out = []
        for vals in itertools.product(*(self.values[k] for k in keys)):
            d = base.to_dict()
            d.update(zip(keys, vals))
            out.append(Hyperparams.from_dict(d))
        return out

    @classmethod
    def named(cls, name: str) -> "Grid":
        try:
            return cls(dict(GRIDS[name]))
        except KeyError:
            raise ConfigError(f"unknown grid {name!r}; choose from {sorted(GRIDS)}") from None


def truncate(value: float, decimals: int = 1) -> float:
    """Cut a reported figure to ``decimals`` places (toward zero).

    Cross-validation tables are reported truncated: the folds 71.7, 72.5,
    70.0, 70.5, 72.1 average 71.36 and are reported as 71.3.
    """
    q = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(float(value))).quantize(q, rounding=ROUND_DOWN))


def fold_summary(fold_scores: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean and population standard deviation."""
    a = np.asarray(fold_scores, dtype=np.float64)
    if a.size == 0:
        raise DataError("no fold scores")
    mean = float(a.sum() / a.size)
    return mean, float(np.sqrt(np.sum((a - mean) ** 2) / a.size))


def _inner_split(ds: EncodedDataset, seed: int) -> tuple[EncodedDataset, EncodedDataset]:
    # Early stopping needs a validation set; carve it from the training folds
    # in the same 8:1 ratio as the main train/validation split.
    s = stratified_split(ds.labels, fractions=(8 / 9, 1 / 9, 0.0), seed=seed)
    return ds.subset(s.train), ds.subset(s.valid)


def cv_score(dataset: EncodedDataset, hp: Hyperparams, plan: FoldPlan,
             workers: int | None = 1, backend: str | None = None) -> list[float]:
    """Accuracy on each fold of a model trained on the remaining folds."""
    if dataset.labels is None:
        raise DataError("cross-validation needs labelled data")
    covered = np.sort(np.concatenate(plan.folds))
    if covered.size != dataset.n_rows or not np.array_equal(covered, np.arange(dataset.n_rows)):
        raise DataError("fold plan does not cover the dataset")
    scores = []
    for i, fold in enumerate(plan.folds):
        train_part = dataset.subset(plan.train_indices(i))
        if np.unique(train_part.labels).size < 2:
            raise DataError(f"training portion of fold {i + 1} has a single class")
        tr, va = _inner_split(train_part, plan.seed)
        model, _ = train(tr, va, hp, workers=workers, backend=backend)
        held_out = dataset.subset(fold)
        scores.append(float(np.mean(predict_class(model, held_out, backend) == held_out.labels)))
    return scores


@dataclass
class TuneRecord:
    combination_id: int
    hyperparams: Hyperparams
    fold_scores: list[float]
    mean: float
    std: float


@dataclass
class TuneResult:
    records: list[TuneRecord]  # sorted by mean, descending; ties keep grid order
    wall_time_s: float
    k: int
    seed: int
    extra: dict = field(default_factory=dict)

    @property
    def best(self) -> TuneRecord:
        return self.records[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["combination_id", "lr", "num_leaves", "max_depth", "leaf_iters", "leaf_reg",
                    *[f"fold{i + 1}" for i in range(self.k)], "mean", "std"])
        for r in self.records:
            hp = r.hyperparams
            w.writerow([r.combination_id, hp.learning_rate, hp.num_leaves, hp.max_depth,
                        hp.leaf_estimation_iterations, hp.leaf_l2_reg,
                        *[repr(s) for s in r.fold_scores], repr(r.mean), repr(r.std)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "wall_time_s": self.wall_time_s,
            "best": self.best.combination_id,
            "records": [
                {"combination_id": r.combination_id, "hyperparams": r.hyperparams.to_dict(),
                 "fold_scores": r.fold_scores, "mean": r.mean, "std": r.std,
                 "mean_pct_reported": truncate(100 * r.mean)}
                for r in self.records
            ],
        }

    def save(self, directory: str | Path, stem: str = "tune_result") -> None:
        d = Path(directory)
        (d / f"{stem}.csv").write_text(self.to_csv())
        (d / f"{stem}.json").write_text(json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n")


def grid_search(dataset: EncodedDataset, grid: Grid, k: int = 5, seed: int = DEFAULT_SEED,
                base: Hyperparams | None = None, workers: int | None = None,
                backend: str | None = None) -> TuneResult:
    """Score every combination on one shared fold plan (a paired comparison)."""
    combos = grid.combinations(base)
    if not combos:
        raise ConfigError("empty grid")
    plan = stratified_kfold(dataset.labels, k=k, seed=seed)
    started = time.perf_counter()
    n_workers = _workers.worker_count(workers)

    def run(item):
        cid, hp = item
        return cid, hp, cv_score(dataset, hp, plan, workers=1, backend=backend)

    items = list(enumerate(combos, start=1))
    if n_workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run, items))
    else:
        results = [run(it) for it in items]
    records = []
    for cid, hp, scores in results:
        mean, std = fold_summary(scores)
        records.append(TuneRecord(cid, hp, scores, mean, std))
    records.sort(key=lambda r: -r.mean)  # stable: equal means stay in grid order
    return TuneResult(records, time.perf_counter() - started, k, int(seed))
