"""One-hot feature space over vehicle characteristics.

Feature names are ``<group>:<token>``; priority is a single binary column
named ``priority``. Groups appear in a fixed order with the characteristics
known at TFC entry first, so a Limited vocabulary is always a prefix-subset of
the Unlimited one built from the same table.

Rows are stored CSR-style (``indptr``/``indices``, no data array since every
stored cell is 1) with sorted column indices inside each row.
"""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, SchemaError
from .ingest import RawTable, VehicleRecord
from .labeling import LabelScheme, assign_labels

CONTAINER_FORMAT = "tfclead.encoded-dataset"
CONTAINER_VERSION = 1


class FeatureSet(str, enum.Enum):
    LIMITED = "limited"
    UNLIMITED = "unlimited"

    @classmethod
    def parse(cls, value: "str | FeatureSet") -> "FeatureSet":
        try:
            return cls(str(getattr(value, "value", value)).lower())
        except ValueError:
            raise DataError(f"feature set must be 'limited' or 'unlimited', got {value!r}") from None


LIMITED_GROUPS = ("config_variant", "product_key", "entry")
IN_PROCESS_GROUPS = ("priority", "inspection_code", "parking_location")
GROUPS = {
    FeatureSet.LIMITED: LIMITED_GROUPS,
    FeatureSet.UNLIMITED: LIMITED_GROUPS + IN_PROCESS_GROUPS,
}
PRIORITY = "priority"


def _group_tokens(rec: VehicleRecord, group: str) -> Iterable[str]:
    if group == "config_variant":
        return rec.config_variants
    if group == "product_key":
        return (rec.product_key,)
    if group == "entry":
        return (rec.entry_weekday_hour,)
    if group == "inspection_code":
        return rec.inspection_codes
    if group == "parking_location":
        return rec.parking_locations
    raise KeyError(group)


@dataclass(frozen=True)
class Vocabulary:
    names: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        index = {n: i for i, n in enumerate(names)}
        if len(index) != len(names):
            raise DataError("duplicate feature names in vocabulary")
        object.__setattr__(self, "index", index)

    def __len__(self) -> int:
        return len(self.names)

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256("\n".join(self.names).encode("utf-8")).hexdigest()

    def groups(self) -> list[str]:
        seen = []
        for n in self.names:
            g = n.split(":", 1)[0]
            if g not in seen:
                seen.append(g)
        return seen


def build_vocabulary(table: RawTable | Sequence[VehicleRecord],
                     feature_set: FeatureSet | str = FeatureSet.UNLIMITED) -> Vocabulary:
    records = table.records if isinstance(table, RawTable) else tuple(table)
    if not records:
        raise DataError("cannot build a vocabulary from an empty table")
    feature_set = FeatureSet.parse(feature_set)
    names: list[str] = []
    for group in GROUPS[feature_set]:
        if group == PRIORITY:
            names.append(PRIORITY)
            continue
        tokens = set()
        for rec in records:
            tokens.update(_group_tokens(rec, group))
        tokens.discard("")
        names.extend(f"{group}:{t}" for t in sorted(tokens))
    return Vocabulary(tuple(names))


@dataclass(frozen=True)
class EncodedDataset:
    indptr: np.ndarray
    indices: np.ndarray
    vocabulary: Vocabulary
    row_ids: tuple[str, ...]
    labels: np.ndarray | None = None
    lead_times: np.ndarray | None = None
    scheme: LabelScheme | None = None
    unknown_tokens: int = 0

    @property
    def n_rows(self) -> int:
        return len(self.indptr) - 1

    @property
    def n_features(self) -> int:
        return len(self.vocabulary)

    @property
    def n_classes(self) -> int | None:
        return None if self.scheme is None else self.scheme.n_classes

    def row(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def column_counts(self) -> np.ndarray:
        return np.bincount(self.indices, minlength=self.n_features)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_features), dtype=np.uint8)
        rows = np.repeat(np.arange(self.n_rows), np.diff(self.indptr))
        out[rows, self.indices] = 1
        return out

    def with_labels(self, scheme: LabelScheme) -> "EncodedDataset":
        if self.lead_times is None:
            raise DataError("dataset carries no lead times to label")
        return replace(self, labels=assign_labels(self.lead_times, scheme), scheme=scheme)

    def subset(self, rows: Sequence[int] | np.ndarray) -> "EncodedDataset":
        rows = np.asarray(rows, dtype=np.int64)
        starts, ends = self.indptr[rows], self.indptr[rows + 1]
        lens = ends - starts
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        np.cumsum(lens, out=indptr[1:])
        pos = _gather_positions(starts, lens)
        return replace(
            self,
            indptr=indptr,
            indices=self.indices[pos],
            row_ids=tuple(self.row_ids[i] for i in rows),
            labels=None if self.labels is None else self.labels[rows],
            lead_times=None if self.lead_times is None else self.lead_times[rows],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(dataset_to_json(self), separators=(",", ":")) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EncodedDataset":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not a dataset container ({exc})") from exc
        return dataset_from_json(payload)


def _gather_positions(starts: np.ndarray, lens: np.ndarray) -> np.ndarray:
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offsets = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    return np.arange(total, dtype=np.int64) + offsets


def encode(table: RawTable | Sequence[VehicleRecord], vocab: Vocabulary) -> EncodedDataset:
    """One-hot encode records; tokens missing from ``vocab`` are dropped and counted."""
    records = table.records if isinstance(table, RawTable) else tuple(table)
    groups = vocab.groups()
    index = vocab.index
    indptr = np.zeros(len(records) + 1, dtype=np.int64)
    cols: list[int] = []
    unknown = 0
    for r, rec in enumerate(records):
        row = []
        for group in groups:
            if group == PRIORITY:
                if rec.priority:
                    row.append(index[PRIORITY])
                continue
            for tok in _group_tokens(rec, group):
                j = index.get(f"{group}:{tok}")
                if j is None:
                    unknown += 1
                else:
                    row.append(j)
        row.sort()
        cols.extend(row)
        indptr[r + 1] = len(cols)
    lead = None
    if records and all(rec.lead_time_days is not None for rec in records):
        lead = np.array([rec.lead_time_days for rec in records], dtype=np.float64)
    return EncodedDataset(
        indptr=indptr,
        indices=np.asarray(cols, dtype=np.int32),
        vocabulary=vocab,
        row_ids=tuple(rec.vehicle_id for rec in records),
        lead_times=lead,
        unknown_tokens=unknown,
    )


def prune_null_columns(ds: EncodedDataset) -> EncodedDataset:
    keep = ds.column_counts() > 0
    if keep.all():
        return ds
    remap = np.cumsum(keep) - 1
    vocab = Vocabulary(tuple(n for n, k in zip(ds.vocabulary.names, keep) if k))
    return replace(ds, indices=remap[ds.indices].astype(np.int32), vocabulary=vocab)


def dataset_to_json(ds: EncodedDataset) -> dict:
    return {
        "format": CONTAINER_FORMAT,
        "format_version": CONTAINER_VERSION,
        "vocabulary": list(ds.vocabulary.names),
        "vocabulary_fingerprint": ds.vocabulary.fingerprint,
        "row_ids": list(ds.row_ids),
        "indptr": ds.indptr.tolist(),
        "indices": ds.indices.tolist(),
        "labels": None if ds.labels is None else ds.labels.tolist(),
        "lead_times": None if ds.lead_times is None else ds.lead_times.tolist(),
        "scheme": None if ds.scheme is None else list(ds.scheme.boundaries),
        "unknown_tokens": ds.unknown_tokens,
    }


def dataset_from_json(payload: dict) -> EncodedDataset:
    if not isinstance(payload, dict) or payload.get("format") != CONTAINER_FORMAT:
        raise SchemaError("not an encoded-dataset container")
    if payload.get("format_version") != CONTAINER_VERSION:
        raise SchemaError(f"unsupported container version {payload.get('format_version')!r}")
    try:
        vocab = Vocabulary(tuple(payload["vocabulary"]))
        if vocab.fingerprint != payload["vocabulary_fingerprint"]:
            raise SchemaError("vocabulary fingerprint mismatch")
        ds = EncodedDataset(
            indptr=np.asarray(payload["indptr"], dtype=np.int64),
            indices=np.asarray(payload["indices"], dtype=np.int32),
            vocabulary=vocab,
            row_ids=tuple(payload["row_ids"]),
            labels=None if payload["labels"] is None else np.asarray(payload["labels"], dtype=np.int64),
            lead_times=None if payload["lead_times"] is None
            else np.asarray(payload["lead_times"], dtype=np.float64),
            scheme=None if payload["scheme"] is None else LabelScheme(tuple(payload["scheme"])),
            unknown_tokens=int(payload["unknown_tokens"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"malformed dataset container: {exc}") from exc
    if ds.indptr[-1] != len(ds.indices) or len(ds.row_ids) != ds.n_rows:
        raise SchemaError("inconsistent sparse structure in dataset container")
    return ds
