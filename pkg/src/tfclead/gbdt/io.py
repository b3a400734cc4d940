"""Versioned JSON model files.

Floats are written with Python's shortest round-trip representation, so a
loaded model reproduces predictions bit for bit. A SHA-256 checksum over the
canonical payload detects truncated or edited files.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import ConfigError, ModelFormatError
from ..labeling import LabelScheme
from .booster import BoostedModel, Hyperparams
from .tree import Tree

MODEL_FORMAT = "tfclead.boosted-model"
FORMAT_VERSION = 1
_TREE_ARRAYS = {
    "feature": np.int32,
    "left": np.int32,
    "right": np.int32,
    "value": np.float64,
    "gain": np.float64,
    "count": np.int64,
    "node_depth": np.int32,
}


def _canonical(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)


def model_to_json(model: BoostedModel) -> dict:
    payload = {
        "format": MODEL_FORMAT,
        "format_version": FORMAT_VERSION,
        "n_classes": model.n_classes,
        "base_scores": [float(x) for x in model.base_scores],
        "hyperparams": model.hyperparams.to_dict(),
        "vocabulary_fingerprint": model.vocabulary_fingerprint,
        "vocabulary": list(model.vocabulary),
        "label_scheme": None if model.scheme is None else list(model.scheme.boundaries),
        "trees": [
            [{k: getattr(t, k).tolist() for k in _TREE_ARRAYS} for t in round_trees]
            for round_trees in model.trees
        ],
    }
    payload["checksum"] = hashlib.sha256(_canonical(payload).encode()).hexdigest()
    return payload


def dumps_model(model: BoostedModel) -> str:
    return _canonical(model_to_json(model)) + "\n"


def save_model(model: BoostedModel, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def model_from_json(payload: dict) -> BoostedModel:
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a tfclead model file")
    if payload.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {payload.get('format_version')!r}")
    body = {k: v for k, v in payload.items() if k != "checksum"}
    if hashlib.sha256(_canonical(body).encode()).hexdigest() != payload.get("checksum"):
        raise ModelFormatError("model checksum mismatch; file is corrupted or was edited")
    try:
        vocab = tuple(payload["vocabulary"])
        if hashlib.sha256("\n".join(vocab).encode("utf-8")).hexdigest() != payload["vocabulary_fingerprint"]:
            raise ModelFormatError("vocabulary fingerprint mismatch")
        n_classes = int(payload["n_classes"])
        trees = [
            [Tree(**{k: np.asarray(t[k], dtype=dt) for k, dt in _TREE_ARRAYS.items()}) for t in rt]
            for rt in payload["trees"]
        ]
        if any(len(rt) != n_classes for rt in trees):
            raise ModelFormatError("every round must hold one tree per class")
        scheme = payload["label_scheme"]
        return BoostedModel(
            n_classes=n_classes,
            base_scores=np.asarray(payload["base_scores"], dtype=np.float64),
            hyperparams=Hyperparams.from_dict(payload["hyperparams"]),
            vocabulary_fingerprint=payload["vocabulary_fingerprint"],
            vocabulary=vocab,
            scheme=None if scheme is None else LabelScheme(tuple(scheme)),
            trees=trees,
        )
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc


def load_model(path: str | Path) -> BoostedModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: unreadable model file ({exc})") from exc
    return model_from_json(payload)
