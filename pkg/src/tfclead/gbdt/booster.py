"""Multiclass gradient boosting: one tree per class per round."""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Any

import numpy as np

from .. import _workers
from ..errors import ConfigError, DataError, VocabularyMismatchError
from ..features import EncodedDataset
from ..labeling import LabelScheme
from . import kernels as _kernels
from .objective import log_softmax, mean_log_loss, softmax, softmax_grad_hess
from .tree import Tree, TreeParams, grow_tree, predict_leaves

# Floor for the prior of a class absent from the training labels.
MIN_PRIOR = 1e-6

_RANGES = {
    "learning_rate": (0.01, 0.3),
    "num_leaves": (32, 1024),
    "max_depth": (2, 200),
    "leaf_estimation_iterations": (1, 10),
    "leaf_l2_reg": (1.0, 10.0),
}


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 0.1
    num_leaves: int = 32
    max_depth: int = 200
    leaf_estimation_iterations: int = 1
    leaf_l2_reg: float = 1.0
    n_rounds_max: int = 1000
    early_stopping_rounds: int = 50
    min_data_in_leaf: int = 20
    min_gain: float = 0.0

    def __post_init__(self):
        for name, (lo, hi) in _RANGES.items():
            v = getattr(self, name)
            if not lo <= v <= hi:
                raise ConfigError(f"{name}={v!r} outside [{lo}, {hi}]")
        for name in ("num_leaves", "max_depth", "leaf_estimation_iterations", "n_rounds_max",
                     "early_stopping_rounds", "min_data_in_leaf"):
            if int(getattr(self, name)) != getattr(self, name):
                raise ConfigError(f"{name} must be an integer")
        if self.n_rounds_max < 1 or self.early_stopping_rounds < 1 or self.min_data_in_leaf < 1:
            raise ConfigError("n_rounds_max, early_stopping_rounds and min_data_in_leaf must be >= 1")
        if self.min_gain < 0:
            raise ConfigError("min_gain must be >= 0")

    def tree_params(self) -> TreeParams:
        return TreeParams(
            num_leaves=int(self.num_leaves),
            max_depth=int(self.max_depth),
            min_data_in_leaf=int(self.min_data_in_leaf),
            min_gain=float(self.min_gain),
            l2=float(self.leaf_l2_reg),
            leaf_iterations=int(self.leaf_estimation_iterations),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown hyperparameters {sorted(unknown)}")
        return cls(**d)


@dataclass
class BoostedModel:
    n_classes: int
    base_scores: np.ndarray
    hyperparams: Hyperparams
    vocabulary_fingerprint: str
    vocabulary: tuple[str, ...]
    scheme: LabelScheme | None
    trees: list[list[Tree]] = field(default_factory=list)

    @property
    def n_rounds(self) -> int:
        return len(self.trees)

    @property
    def total_trees(self) -> int:
        return sum(len(r) for r in self.trees)


@dataclass
class TrainReport:
    rounds_completed: int
    rounds_trained: int
    best_round: int
    total_trees: int
    history: list[dict[str, float]]
    wall_time_s: float
    relevance_gain: np.ndarray
    relevance_splits: np.ndarray
    backend: str
    workers: int
    early_stopped: bool

    def to_json(self, vocabulary: tuple[str, ...] | None = None) -> dict[str, Any]:
        names = vocabulary or tuple(str(i) for i in range(len(self.relevance_gain)))
        order = np.argsort(-self.relevance_gain, kind="stable")
        relevance = [
            {"feature": names[i], "gain": float(self.relevance_gain[i]),
             "split_count": int(self.relevance_splits[i])}
            for i in order if self.relevance_splits[i] > 0
        ]
        return {
            "rounds_completed": self.rounds_completed,
            "rounds_trained": self.rounds_trained,
            "best_round": self.best_round,
            "total_trees": self.total_trees,
            "early_stopped": self.early_stopped,
            "wall_time_s": self.wall_time_s,
            "backend": self.backend,
            "workers": self.workers,
            "history": self.history,
            "feature_relevance": relevance,
        }


def _check_pair(train_ds: EncodedDataset, valid_ds: EncodedDataset | None) -> int:
    if train_ds.labels is None or train_ds.scheme is None:
        raise DataError("training data must be labelled")
    if train_ds.n_rows == 0:
        raise DataError("empty training set")
    if np.unique(train_ds.labels).size < 2:
        raise DataError("training set contains a single class")
    if valid_ds is not None:
        if valid_ds.vocabulary.fingerprint != train_ds.vocabulary.fingerprint:
            raise VocabularyMismatchError("train and validation vocabularies differ")
        if valid_ds.scheme != train_ds.scheme or valid_ds.labels is None:
            raise DataError("train and validation label schemes differ")
    return train_ds.scheme.n_classes


def _accuracy(scores: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.argmax(scores, axis=1) == y)) if len(y) else float("nan")


def train(train_ds: EncodedDataset, valid_ds: EncodedDataset | None,
          hp: Hyperparams | None = None, workers: int | None = None,
          backend: str | None = None) -> tuple[BoostedModel, TrainReport]:
    """Boost until ``n_rounds_max`` or until validation log-loss stalls.

    The returned model is truncated to the best validation round. Without a
    validation set every round is kept.
    """
    hp = hp or Hyperparams()
    n_classes = _check_pair(train_ds, valid_ds)
    kern = _kernels.get_backend(backend)
    n_workers = _workers.worker_count(workers)
    tp = hp.tree_params()
    lr = float(hp.learning_rate)
    started = time.perf_counter()

    indptr = np.ascontiguousarray(train_ds.indptr, dtype=np.int64)
    indices = np.ascontiguousarray(train_ds.indices, dtype=np.int32)
    nf = train_ds.n_features
    y = train_ds.labels
    counts = np.bincount(y, minlength=n_classes)
    base = np.log(np.maximum(counts / counts.sum(), MIN_PRIOR))
    scores = np.tile(base, (len(y), 1))
    if valid_ds is not None:
        v_indptr = np.ascontiguousarray(valid_ds.indptr, dtype=np.int64)
        v_indices = np.ascontiguousarray(valid_ds.indices, dtype=np.int32)
        yv = valid_ds.labels
        v_scores = np.tile(base, (len(yv), 1))

    onehot = np.zeros((len(y), n_classes))
    onehot[np.arange(len(y)), y] = 1.0

    def class_tree(c: int, grad_c: np.ndarray, hess_c: np.ndarray, round_scores: np.ndarray):
        def newton(rows: np.ndarray, v: float) -> tuple[float, float]:
            s = round_scores[rows].copy()
            s[:, c] += v
            p = softmax(s)[:, c]
            return float(np.sum(p - onehot[rows, c])), float(np.sum(p * (1.0 - p)))

        return grow_tree(indptr, indices, nf, grad_c, hess_c, tp, newton, kern)

    trees: list[list[Tree]] = []
    history: list[dict[str, float]] = []
    best_loss, best_round = np.inf, 0
    pool = ThreadPoolExecutor(max_workers=n_workers) if n_workers > 1 else None
    try:
        for rnd in range(hp.n_rounds_max):
            g, h = softmax_grad_hess(scores, y)
            g_cols = np.ascontiguousarray(g.T)
            h_cols = np.ascontiguousarray(h.T)
            snapshot = scores.copy()
            jobs = [(c, g_cols[c], h_cols[c], snapshot) for c in range(n_classes)]
            if pool is None:
                grown = [class_tree(*job) for job in jobs]
            else:
                grown = list(pool.map(lambda job: class_tree(*job), jobs))
            round_trees = []
            for c, (tree, leaf_of_row) in enumerate(grown):
                scores[:, c] += lr * tree.value[leaf_of_row]
                if valid_ds is not None:
                    v_scores[:, c] += lr * tree.value[predict_leaves(tree, v_indptr, v_indices, kern)]
                round_trees.append(tree)
            trees.append(round_trees)
            rec = {"round": rnd + 1, "train_loss": mean_log_loss(scores, y),
                   "train_accuracy": _accuracy(scores, y)}
            if valid_ds is not None:
                rec["valid_loss"] = mean_log_loss(v_scores, yv)
                rec["valid_accuracy"] = _accuracy(v_scores, yv)
                if rec["valid_loss"] < best_loss:
                    best_loss, best_round = rec["valid_loss"], rnd + 1
            else:
                best_round = rnd + 1
            history.append(rec)
            if valid_ds is not None and rnd + 1 - best_round >= hp.early_stopping_rounds:
                break
    finally:
        if pool is not None:
            pool.shutdown()

    model = BoostedModel(
        n_classes=n_classes,
        base_scores=base,
        hyperparams=hp,
        vocabulary_fingerprint=train_ds.vocabulary.fingerprint,
        vocabulary=train_ds.vocabulary.names,
        scheme=train_ds.scheme,
        trees=trees[:best_round],
    )
    gain, splits = feature_relevance(model)
    report = TrainReport(
        rounds_completed=best_round,
        rounds_trained=len(trees),
        best_round=best_round,
        total_trees=model.total_trees,
        history=history,
        wall_time_s=time.perf_counter() - started,
        relevance_gain=gain,
        relevance_splits=splits,
        backend=_kernels.backend_name(kern),
        workers=n_workers,
        early_stopped=len(trees) < hp.n_rounds_max,
    )
    return model, report


def _rows_of(model: BoostedModel, rows: EncodedDataset, check: bool) -> tuple[np.ndarray, np.ndarray]:
    if check and rows.vocabulary.fingerprint != model.vocabulary_fingerprint:
        raise VocabularyMismatchError(
            "rows were encoded with a different vocabulary than the model; "
            "re-encode them with the model's vocabulary")
    return (np.ascontiguousarray(rows.indptr, dtype=np.int64),
            np.ascontiguousarray(rows.indices, dtype=np.int32))


def predict_raw(model: BoostedModel, rows: EncodedDataset, backend: str | None = None,
                check_vocabulary: bool = True) -> np.ndarray:
    indptr, indices = _rows_of(model, rows, check_vocabulary)
    kern = _kernels.get_backend(backend)
    lr = float(model.hyperparams.learning_rate)
    scores = np.tile(np.asarray(model.base_scores, dtype=np.float64), (len(indptr) - 1, 1))
    for round_trees in model.trees:
        for c, tree in enumerate(round_trees):
            scores[:, c] += lr * tree.value[predict_leaves(tree, indptr, indices, kern)]
    return scores


def predict_scores(model: BoostedModel, rows: EncodedDataset, backend: str | None = None) -> np.ndarray:
    """Per-row class probabilities."""
    return softmax(predict_raw(model, rows, backend))


def predict_class(model: BoostedModel, rows: EncodedDataset, backend: str | None = None) -> np.ndarray:
    # argmax returns the first maximum, i.e. the lowest class index on ties.
    return np.argmax(predict_raw(model, rows, backend), axis=1)


def predict_log_proba(model: BoostedModel, rows: EncodedDataset) -> np.ndarray:
    return log_softmax(predict_raw(model, rows))


def feature_relevance(model: BoostedModel) -> tuple[np.ndarray, np.ndarray]:
    """Summed split gain and split count per feature over all trees."""
    nf = len(model.vocabulary)
    gain = np.zeros(nf)
    splits = np.zeros(nf, dtype=np.int64)
    for round_trees in model.trees:
        for tree in round_trees:
            internal = tree.feature >= 0
            np.add.at(gain, tree.feature[internal], tree.gain[internal])
            np.add.at(splits, tree.feature[internal], 1)
    return gain, splits
