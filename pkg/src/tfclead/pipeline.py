"""Stage wiring shared by the CLI and the experiments in :mod:`evalcmp`."""
from __future__ import annotations

from dataclasses import dataclass

from .features import EncodedDataset, FeatureSet, Vocabulary, build_vocabulary, encode, prune_null_columns
from .gbdt import BoostedModel, Hyperparams, TrainReport, train
from .ingest import FilterReport, RawTable, partition_by_derivative, validate_and_filter
from .labeling import LabelScheme
from .split import DEFAULT_SEED, SplitIndices, stratified_split


@dataclass(frozen=True)
class Prepared:
    table: RawTable
    dataset: EncodedDataset
    filter_report: FilterReport


def prepare(table: RawTable, feature_set: FeatureSet | str, scheme: LabelScheme,
            derivative: str = "all", vocabulary: Vocabulary | None = None) -> Prepared:
    """Filter, select a derivative, one-hot encode, prune and label.

    With ``vocabulary`` given the table is encoded against it (unknown tokens
    dropped) and nothing is pruned, so the result stays compatible with a
    model trained on that vocabulary.
    """
    filtered, report = validate_and_filter(table)
    part = partition_by_derivative(filtered)[derivative.upper()]
    if vocabulary is None:
        ds = prune_null_columns(encode(part, build_vocabulary(part, feature_set)))
    else:
        ds = encode(part, vocabulary)
    return Prepared(part, ds.with_labels(scheme), report)


@dataclass(frozen=True)
class Fitted:
    model: BoostedModel
    report: TrainReport
    split: SplitIndices
    train: EncodedDataset
    valid: EncodedDataset
    test: EncodedDataset


def split_dataset(ds: EncodedDataset, seed: int = DEFAULT_SEED):
    s = stratified_split(ds.labels, seed=seed)
    return s, ds.subset(s.train), ds.subset(s.valid), ds.subset(s.test)


def fit(ds: EncodedDataset, hp: Hyperparams | None = None, seed: int = DEFAULT_SEED,
        workers: int | None = None, backend: str | None = None) -> Fitted:
    s, tr, va, te = split_dataset(ds, seed)
    model, report = train(tr, va, hp, workers=workers, backend=backend)
    return Fitted(model, report, s, tr, va, te)
