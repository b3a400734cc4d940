import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import exhaustive_tree, nested, random_tree_instance, same_tree
from tfclead.gbdt import kernels
from tfclead.gbdt.tree import TreeParams, best_split, grow_tree, predict_leaves
from conftest import dense_dataset


def _grow(X, g, h, **kw):
    ds = dense_dataset(X)
    return grow_tree(ds.indptr, ds.indices, ds.n_features, np.asarray(g, float), np.asarray(h, float),
                     TreeParams(**kw))


class TestGrow:
    def test_single_leaf_when_nothing_splits(self):
        X = np.ones((6, 3), dtype=np.uint8)
        g, h = np.full(6, 0.4), np.full(6, 0.25)
        tree, leaf_of_row = _grow(X, g, h, min_data_in_leaf=1, l2=1.0)
        assert tree.n_leaves == 1 and tree.n_nodes == 1
        assert tree.value[0] == pytest.approx(-g.sum() / (h.sum() + 1.0), abs=1e-15)
        assert np.all(leaf_of_row == 0)

    def test_depth_one_hand_computed(self):
        X = np.array([[1, 0, 1], [1, 1, 0], [0, 1, 1], [0, 0, 0],
                      [1, 0, 0], [0, 1, 0], [1, 1, 1], [0, 0, 1]], dtype=np.uint8)
        g = np.array([-1.0, -0.8, 0.5, 0.7, -0.9, 0.6, -0.7, 0.4])
        h = np.full(8, 0.5)
        tree, _ = _grow(X, g, h, max_depth=1, min_data_in_leaf=1, l2=1.0)
        # feature 0 separates the negative gradients exactly
        assert tree.feature[0] == 0
        present, absent = g[X[:, 0] == 1], g[X[:, 0] == 0]
        assert tree.value[tree.right[0]] == pytest.approx(-present.sum() / (2.0 + 1.0), abs=1e-12)
        assert tree.value[tree.left[0]] == pytest.approx(-absent.sum() / (2.0 + 1.0), abs=1e-12)
        assert same_tree(nested(tree), exhaustive_tree(X, g, h, 1, 1, 1.0))

    def test_oracle_random_instances(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            X, g, h, depth, min_data, l2 = random_tree_instance(rng)
            tree, _ = _grow(X, g, h, max_depth=depth, min_data_in_leaf=min_data, l2=l2, num_leaves=8)
            assert same_tree(nested(tree), exhaustive_tree(X, g, h, depth, min_data, l2))

    def test_tie_goes_to_lowest_feature(self):
        X = np.array([[1, 1], [1, 1], [0, 0], [0, 0]], dtype=np.uint8)
        tree, _ = _grow(X, [-1, -1, 1, 1], [1, 1, 1, 1], min_data_in_leaf=1, max_depth=1)
        assert tree.feature[0] == 0

    def test_min_gain_blocks_split(self):
        X = np.array([[1], [0]], dtype=np.uint8)
        tree, _ = _grow(X, [-1.0, 1.0], [1.0, 1.0], min_data_in_leaf=1, min_gain=10.0)
        assert tree.n_leaves == 1

    def test_newton_iterations_on_quadratic(self):
        # quadratic loss: each Newton step is reproduced by hand
        X = np.zeros((4, 1), dtype=np.uint8)
        g = np.array([1.0, 2.0, -0.5, 0.5])
        h = np.full(4, 0.5)
        ds = dense_dataset(X)

        def newton(rows, v):
            return float(np.sum(g[rows] + h[rows] * v)), float(np.sum(h[rows]))

        p = TreeParams(min_data_in_leaf=1, l2=1.0, leaf_iterations=3)
        tree, _ = grow_tree(ds.indptr, ds.indices, 1, g, h, p, newton)
        G, H, v = g.sum(), h.sum(), 0.0
        for _ in range(3):
            v = v - (G + H * v) / (H + 1.0)
        assert tree.value[0] == pytest.approx(v, abs=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32), st.integers(2, 40), st.integers(1, 8), st.integers(1, 10))
    def test_constraints(self, seed, num_leaves, max_depth, min_data):
        rng = np.random.default_rng(seed)
        X = (rng.random((300, 12)) < 0.3).astype(np.uint8)
        g, h = rng.normal(size=300), rng.uniform(0.1, 1, 300)
        tree, leaf_of_row = _grow(X, g, h, num_leaves=num_leaves, max_depth=max_depth,
                                  min_data_in_leaf=min_data)
        leaves = tree.feature < 0
        assert tree.n_leaves <= num_leaves and tree.depth <= max_depth
        assert np.all(tree.count[leaves] >= min_data)
        assert np.all(tree.gain[~leaves] > 0)
        assert tree.n_nodes == 2 * tree.n_leaves - 1
        np.testing.assert_array_equal(np.bincount(leaf_of_row, minlength=tree.n_nodes)[leaves],
                                      tree.count[leaves])
        ds = dense_dataset(X)
        np.testing.assert_array_equal(predict_leaves(tree, ds.indptr, ds.indices), leaf_of_row)

    def test_best_first_order(self):
        rng = np.random.default_rng(1)
        X = (rng.random((400, 10)) < 0.4).astype(np.uint8)
        g, h = rng.normal(size=400), np.full(400, 0.25)
        full, _ = _grow(X, g, h, num_leaves=64, min_data_in_leaf=5)
        small, _ = _grow(X, g, h, num_leaves=4, min_data_in_leaf=5)
        # the three splits kept under a 4-leaf budget are the three best of the larger tree
        top = np.sort(full.gain[full.feature >= 0])[::-1]
        assert small.n_leaves == 4
        assert set(np.round(small.gain[small.feature >= 0], 9)) <= set(np.round(top, 9))
        assert small.total_gain() <= full.total_gain()


class TestBestSplit:
    def test_no_valid_split(self):
        hist = (np.array([0.0]), np.array([0.0]), np.array([0]))
        assert best_split(hist, 1.0, 1.0, 5, TreeParams(min_data_in_leaf=1)) is None


class TestBackends:
    @pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="extension not built")
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32))
    def test_identical_trees(self, seed):
        rng = np.random.default_rng(seed)
        X = (rng.random((250, 15)) < rng.uniform(0.05, 0.6)).astype(np.uint8)
        g, h = rng.normal(size=250), rng.uniform(0.01, 1, 250)
        ds = dense_dataset(X)
        p = TreeParams(num_leaves=16, min_data_in_leaf=3)
        trees = [grow_tree(ds.indptr, ds.indices, 15, g, h, p, kernels=kernels.BACKENDS[b])
                 for b in ("python", "cython")]
        assert trees[0][0] == trees[1][0]
        np.testing.assert_array_equal(trees[0][1], trees[1][1])

    @pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="extension not built")
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32))
    def test_kernels_agree(self, seed):
        rng = np.random.default_rng(seed)
        X = (rng.random((120, 9)) < 0.3).astype(np.uint8)
        ds = dense_dataset(X)
        rows = np.sort(rng.choice(120, size=int(rng.integers(0, 120)), replace=False)).astype(np.int32)
        g, h = rng.normal(size=120), rng.random(120)
        py, cy = kernels.BACKENDS["python"], kernels.BACKENDS["cython"]
        indptr, indices = ds.indptr.astype(np.int64), ds.indices.astype(np.int32)
        for a, b in zip(py.build_histogram(rows, indptr, indices, g, h, 9),
                        cy.build_histogram(rows, indptr, indices, g, h, 9)):
            np.testing.assert_array_equal(a, b)
        f = int(rng.integers(9))
        np.testing.assert_array_equal(py.row_has_feature(rows, indptr, indices, f),
                                      cy.row_has_feature(rows, indptr, indices, f))
        np.testing.assert_array_equal(py.row_has_feature(rows, indptr, indices, f), X[rows, f] == 1)

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            kernels.get_backend("fortran")

    def test_env_forces_fallback(self, monkeypatch):
        monkeypatch.setenv("TFCLEAD_BACKEND", "python")
        assert kernels.get_backend() is kernels.BACKENDS["python"]
