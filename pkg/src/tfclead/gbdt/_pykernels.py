"""numpy fallback for the compiled kernels.

Histograms accumulate rows in the order given and features in CSR order, which
is exactly what ``np.bincount`` does, so both backends produce bit-identical
sums.
"""
import numpy as np


def _positions(rows, indptr):
    starts = indptr[rows]
    lens = indptr[rows + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64), lens
    offsets = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    return np.arange(total, dtype=np.int64) + offsets, lens


def build_histogram(rows, indptr, indices, grad, hess, n_features):
    pos, lens = _positions(rows, indptr)
    feats = indices[pos]
    owner = np.repeat(rows, lens)
    hg = np.bincount(feats, weights=grad[owner], minlength=n_features)
    hh = np.bincount(feats, weights=hess[owner], minlength=n_features)
    hc = np.bincount(feats, minlength=n_features).astype(np.int64)
    return hg, hh, hc


def _membership(rows, targets, indptr, indices):
    pos, lens = _positions(rows, indptr)
    local = np.repeat(np.arange(len(rows)), lens)
    hit = indices[pos] == targets[local]
    out = np.zeros(len(rows), dtype=bool)
    out[local[hit]] = True
    return out


def row_has_feature(rows, indptr, indices, feature):
    rows = np.asarray(rows)
    return _membership(rows, np.full(len(rows), feature, dtype=np.int32), indptr, indices)


def predict_leaves(indptr, indices, feature, left, right):
    n = len(indptr) - 1
    node = np.zeros(n, dtype=np.int32)
    active = np.flatnonzero(feature[node] >= 0)
    while active.size:
        cur = node[active]
        has = _membership(active, feature[cur], indptr, indices)
        node[active] = np.where(has, right[cur], left[cur])
        active = active[feature[node[active]] >= 0]
    return node
