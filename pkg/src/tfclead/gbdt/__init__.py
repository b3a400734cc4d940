"""Histogram GBDT core: leaf-wise trees, multiclass softmax objective."""
from .booster import (
    BoostedModel,
    Hyperparams,
    TrainReport,
    feature_relevance,
    predict_class,
    predict_raw,
    predict_scores,
    train,
)
from .io import dumps_model, load_model, save_model
from .kernels import BACKENDS, get_backend
from .objective import cross_entropy, softmax, softmax_grad_hess
from .tree import Tree, TreeParams, grow_tree

__all__ = [
    "BACKENDS",
    "BoostedModel",
    "Hyperparams",
    "TrainReport",
    "Tree",
    "TreeParams",
    "cross_entropy",
    "dumps_model",
    "feature_relevance",
    "get_backend",
    "grow_tree",
    "load_model",
    "predict_class",
    "predict_raw",
    "predict_scores",
    "save_model",
    "softmax",
    "softmax_grad_hess",
    "train",
]
