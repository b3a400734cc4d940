"""Leaf-wise regression tree growth on binary sparse features.

A split sends rows without the feature (value 0 <= 0.5) left and rows with it
right. Per-feature histograms therefore only store the "present" bin; the
"absent" bin is the node total minus it.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels as _kernels

THRESHOLD = 0.5
# Relative slack under which two split gains count as tied.
GAIN_TIE_RTOL = 1e-10


@dataclass(frozen=True)
class TreeParams:
    """Structural constraints of one tree (looser bounds than ``Hyperparams``)."""

    num_leaves: int = 32
    max_depth: int = 200
    min_data_in_leaf: int = 20
    min_gain: float = 0.0
    l2: float = 1.0
    leaf_iterations: int = 1

    def __post_init__(self):
        if self.num_leaves < 1 or self.max_depth < 0 or self.min_data_in_leaf < 1:
            raise ValueError("num_leaves >= 1, max_depth >= 0 and min_data_in_leaf >= 1 required")
        if self.l2 < 0 or self.leaf_iterations < 1:
            raise ValueError("l2 >= 0 and leaf_iterations >= 1 required")


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray  # int32, -1 marks a leaf
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # leaf outputs before shrinkage; 0 on internal nodes
    gain: np.ndarray  # split gain on internal nodes
    count: np.ndarray  # training rows reaching the node
    node_depth: np.ndarray

    @property
    def threshold(self) -> np.ndarray:
        return np.where(self.feature >= 0, THRESHOLD, np.nan)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def depth(self) -> int:
        return int(self.node_depth.max())

    def total_gain(self) -> float:
        return float(self.gain.sum())

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k), equal_nan=True)
                   for k in ("feature", "left", "right", "value", "gain", "count", "node_depth"))

    __hash__ = None


@dataclass
class _Node:
    rows: np.ndarray
    depth: int
    g: float
    h: float
    n: int
    hist: tuple | None = None
    split: tuple | None = None  # (gain, feature, g_right, h_right, n_right)


def _score(g, h, l2):
    return g * g / (h + l2)


def best_split(hist, g: float, h: float, n: int, p: TreeParams):
    """Highest-gain valid split of a node, ties to the lowest feature index."""
    hg, hh, hc = hist
    cl = n - hc
    valid = (hc >= p.min_data_in_leaf) & (cl >= p.min_data_in_leaf)
    if not valid.any():
        return None
    parent = _score(g, h, p.l2)
    with np.errstate(divide="ignore", invalid="ignore"):  # empty sides are masked below
        gain = _score(g - hg, h - hh, p.l2) + _score(hg, hh, p.l2) - parent
    gain = np.where(valid, gain, -np.inf)
    top = gain.max()
    tol = GAIN_TIE_RTOL * max(1.0, abs(parent), abs(top))
    if not top > p.min_gain + tol:
        return None
    f = int(np.flatnonzero(gain >= top - tol)[0])
    return float(gain[f]), f, float(hg[f]), float(hh[f]), int(hc[f])


NewtonFn = Callable[[np.ndarray, float], tuple[float, float]]


def leaf_value(node_g: float, node_h: float, rows: np.ndarray, p: TreeParams,
               newton: NewtonFn | None) -> float:
    """Newton steps ``v <- v - G(v) / (H(v) + l2)`` starting from ``v = 0``."""
    v = -node_g / (node_h + p.l2)
    for _ in range(p.leaf_iterations - 1):
        if newton is None:
            break
        g, h = newton(rows, v)
        v = v - g / (h + p.l2)
    return v


def grow_tree(indptr: np.ndarray, indices: np.ndarray, n_features: int,
              grad: np.ndarray, hess: np.ndarray, params: TreeParams,
              newton: NewtonFn | None = None, kernels=None) -> tuple[Tree, np.ndarray]:
    """Grow one tree best-first; returns the tree and the leaf node of every row.

    ``newton(rows, v)`` must return gradient and hessian sums over ``rows`` at
    scores shifted by ``v``; it is only called when ``leaf_iterations > 1``.
    """
    k = kernels or _kernels.DEFAULT
    grad = np.ascontiguousarray(grad, dtype=np.float64)
    hess = np.ascontiguousarray(hess, dtype=np.float64)
    n_rows = len(indptr) - 1
    rows = np.arange(n_rows, dtype=np.int32)

    def hist_of(r):
        return k.build_histogram(r, indptr, indices, grad, hess, n_features)

    def consider(node_id: int, node: _Node):
        if node.depth >= params.max_depth or node.n < 2 * params.min_data_in_leaf:
            node.hist = None
            return
        if node.hist is None:
            node.hist = hist_of(node.rows)
        node.split = best_split(node.hist, node.g, node.h, node.n, params)
        if node.split is None:
            node.hist = None
        else:
            heapq.heappush(heap, (-node.split[0], node_id))

    nodes: list[_Node] = [_Node(rows, 0, float(grad.sum()), float(hess.sum()), n_rows)]
    children: dict[int, tuple[int, int, int, float]] = {}
    heap: list[tuple[float, int]] = []
    consider(0, nodes[0])
    n_leaves = 1
    while heap and n_leaves < params.num_leaves:
        _, nid = heapq.heappop(heap)
        node = nodes[nid]
        gain, f, gr, hr, nr = node.split
        mask = k.row_has_feature(node.rows, indptr, indices, f)
        right = _Node(node.rows[mask], node.depth + 1, gr, hr, nr)
        left = _Node(node.rows[~mask], node.depth + 1, node.g - gr, node.h - hr, node.n - nr)
        small, large = (right, left) if right.n <= left.n else (left, right)
        if max(left.depth, right.depth) < params.max_depth:
            small.hist = hist_of(small.rows)
            large.hist = tuple(a - b for a, b in zip(node.hist, small.hist))
        node.hist = None
        lid, rid = len(nodes), len(nodes) + 1
        nodes.extend([left, right])
        children[nid] = (lid, rid, f, gain)
        n_leaves += 1
        consider(lid, left)
        consider(rid, right)

    m = len(nodes)
    feature = np.full(m, -1, dtype=np.int32)
    left_a = np.full(m, -1, dtype=np.int32)
    right_a = np.full(m, -1, dtype=np.int32)
    value = np.zeros(m)
    gains = np.zeros(m)
    leaf_of_row = np.empty(n_rows, dtype=np.int32)
    for nid, node in enumerate(nodes):
        if nid in children:
            lid, rid, f, gain = children[nid]
            feature[nid], left_a[nid], right_a[nid], gains[nid] = f, lid, rid, gain
        else:
            value[nid] = leaf_value(node.g, node.h, node.rows, params, newton)
            leaf_of_row[node.rows] = nid
    tree = Tree(
        feature=feature,
        left=left_a,
        right=right_a,
        value=value,
        gain=gains,
        count=np.array([nd.n for nd in nodes], dtype=np.int64),
        node_depth=np.array([nd.depth for nd in nodes], dtype=np.int32),
    )
    return tree, leaf_of_row


def predict_leaves(tree: Tree, indptr: np.ndarray, indices: np.ndarray, kernels=None) -> np.ndarray:
    k = kernels or _kernels.DEFAULT
    return k.predict_leaves(indptr, indices, tree.feature, tree.left, tree.right)
