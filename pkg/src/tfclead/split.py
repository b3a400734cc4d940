"""Deterministic stratified partitions.

Per-class quotas use largest-remainder apportionment and within-class order is
shuffled by a PCG64 stream seeded from ``seed``, so the output depends only on
the labels and the seed.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError

DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)
DEFAULT_SEED = 42


class StratificationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray
    seed: int

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "train": self.train.tolist(),
            "valid": self.valid.tolist(),
            "test": self.test.tolist(),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), separators=(",", ":")) + "\n")


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[np.ndarray, ...]
    seed: int

    @property
    def k(self) -> int:
        return len(self.folds)

    def train_indices(self, i: int) -> np.ndarray:
        return np.sort(np.concatenate([f for j, f in enumerate(self.folds) if j != i]))

    def to_json(self) -> dict:
        return {"seed": self.seed, "folds": [f.tolist() for f in self.folds]}


def apportion(total: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder split of ``total`` items; remainder ties go to the earlier part."""
    quotas = [total * f for f in fractions]
    counts = [int(np.floor(q)) for q in quotas]
    left = total - sum(counts)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:left]:
        counts[i] += 1
    return counts


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def _check_labels(labels) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim != 1:
        raise DataError("labels must be one-dimensional")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        raise DataError("labels must be integers")
    return y.astype(np.int64, copy=False)


def stratified_split(labels, fractions: Sequence[float] = DEFAULT_FRACTIONS,
                     seed: int = DEFAULT_SEED) -> SplitIndices:
    y = _check_labels(labels)
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1) > 1e-9:
        raise DataError(f"fractions must be three non-negative numbers summing to 1, got {fractions}")
    rng = _rng(seed)
    parts: list[list[np.ndarray]] = [[], [], []]
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if members.size < 3:
            warnings.warn(f"class {cls} has {members.size} member(s); assigned train-first",
                          StratificationWarning, stacklevel=2)
        members = rng.permutation(members)
        counts = apportion(members.size, fractions)
        start = 0
        for part, n in zip(parts, counts):
            part.append(members[start:start + n])
            start += n
    train, valid, test = (np.sort(np.concatenate(p)) if p else np.empty(0, np.int64) for p in parts)
    return SplitIndices(train, valid, test, int(seed))


def stratified_kfold(labels, k: int = 5, seed: int = DEFAULT_SEED) -> FoldPlan:
    """k folds whose per-class counts differ by at most one.

    Shuffled class blocks are laid end to end and dealt round-robin, so every
    class and the fold sizes themselves are balanced to within one row.
    """
    y = _check_labels(labels)
    if k < 2:
        raise DataError(f"k-fold needs k >= 2, got {k}")
    if k > y.size:
        raise DataError(f"k={k} exceeds the number of rows ({y.size})")
    rng = _rng(seed)
    blocks = []
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if members.size < k:
            warnings.warn(f"class {cls} has fewer members ({members.size}) than folds ({k})",
                          StratificationWarning, stacklevel=2)
        blocks.append(rng.permutation(members))
    order = np.concatenate(blocks)
    folds = tuple(np.sort(order[i::k]) for i in range(k))
    return FoldPlan(folds, int(seed))
