"""Multiclass softmax cross-entropy."""
from __future__ import annotations

import numpy as np


def softmax(scores: np.ndarray) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    e = np.exp(s - s.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(scores: np.ndarray) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    m = s.max(axis=-1, keepdims=True)
    return s - m - np.log(np.exp(s - m).sum(axis=-1, keepdims=True))


def cross_entropy(scores: np.ndarray, true_class) -> np.ndarray | float:
    """Per-row ``-log softmax(scores)[true_class]``."""
    lp = log_softmax(scores)
    if lp.ndim == 1:
        return float(-lp[int(true_class)])
    y = np.asarray(true_class, dtype=np.int64)
    return -lp[np.arange(len(y)), y]


def softmax_grad_hess(scores: np.ndarray, true_class) -> tuple[np.ndarray, np.ndarray]:
    """Gradient ``p - onehot`` and diagonal Hessian ``p (1 - p)``.

    Works on one score vector or a ``(n, K)`` matrix with per-row classes.
    """
    p = softmax(scores)
    g = p.copy()
    if p.ndim == 1:
        g[int(true_class)] -= 1.0
    else:
        y = np.asarray(true_class, dtype=np.int64)
        g[np.arange(len(y)), y] -= 1.0
    return g, p * (1.0 - p)


def mean_log_loss(scores: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(cross_entropy(scores, y)))
