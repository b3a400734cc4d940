import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import dense_dataset, make_record
from tfclead.errors import DataError
from tfclead.features import (
    EncodedDataset,
    FeatureSet,
    Vocabulary,
    build_vocabulary,
    encode,
    prune_null_columns,
)
from tfclead.ingest import RawTable
from tfclead.labeling import scheme_for


@pytest.fixture
def toy():
    return RawTable((
        make_record("V1", config_variants=frozenset({"AA1", "BB2"}),
                    inspection_codes=frozenset({"1-1F"}), parking_locations=frozenset({"P1"}), priority=1),
        make_record("V2", config_variants=frozenset({"BB2"}), inspection_codes=frozenset({"2-2A"}),
                    parking_locations=frozenset({"P1"})),
    ))


class TestVocabulary:
    def test_limited_count(self, toy):
        v = build_vocabulary(toy, FeatureSet.LIMITED)
        assert v.names == ("config_variant:AA1", "config_variant:BB2", "product_key:A10IC", "entry:Monday-08")

    def test_unlimited_count(self, toy):
        v = build_vocabulary(toy, "unlimited")
        assert len(v) == 8
        assert v.groups() == ["config_variant", "product_key", "entry", "priority",
                              "inspection_code", "parking_location"]

    def test_limited_prefix_of_unlimited(self, toy):
        lim = build_vocabulary(toy, "limited")
        unl = build_vocabulary(toy, "unlimited")
        assert unl.names[: len(lim)] == lim.names
        assert set(lim.groups()) < set(unl.groups())

    def test_empty(self):
        with pytest.raises(DataError):
            build_vocabulary(RawTable(()), "limited")

    def test_duplicates_rejected(self):
        with pytest.raises(DataError):
            Vocabulary(("a", "a"))

    def test_fingerprint_content_hash(self):
        assert Vocabulary(("a", "b")).fingerprint == Vocabulary(["a", "b"]).fingerprint
        assert Vocabulary(("a", "b")).fingerprint != Vocabulary(("b", "a")).fingerprint

    def test_unknown_feature_set(self):
        with pytest.raises(ValueError):
            FeatureSet.parse("medium")


class TestEncode:
    def test_cells(self, toy):
        vocab = Vocabulary(("config_variant:AA1", "config_variant:BB2", "config_variant:CC3"))
        ds = encode(toy, vocab)
        assert ds.to_dense().tolist() == [[1, 1, 0], [0, 1, 0]]

    def test_priority_and_empty_codes(self):
        t = RawTable((make_record(priority=1), make_record("V2", inspection_codes=frozenset({"9-9X"}))))
        v = build_vocabulary(t, "unlimited")
        d = encode(RawTable((make_record("V3", priority=1),)), v).to_dense()[0]
        assert d[v.index["priority"]] == 1
        assert d[v.index["inspection_code:9-9X"]] == 0

    def test_unknown_tokens_dropped_and_counted(self, toy):
        v = build_vocabulary(toy, "limited")
        ds = encode(RawTable((make_record("X", config_variants=frozenset({"ZZ9", "AA1"}),
                                          product_key="E99EV"),)), v)
        assert ds.unknown_tokens == 2
        assert ds.to_dense()[0].tolist() == [1, 0, 0, 1]

    def test_single_valued_groups_one_hot(self, small_fleet):
        v = build_vocabulary(small_fleet, "unlimited")
        dense = encode(small_fleet, v).to_dense()
        for g in ("product_key", "entry"):
            cols = [i for i, n in enumerate(v.names) if n.startswith(g + ":")]
            assert np.all(dense[:, cols].sum(axis=1) == 1)

    def test_injective(self, small_fleet):
        v = build_vocabulary(small_fleet, "unlimited")
        ds = encode(small_fleet, v)
        sig = {}
        for i, r in enumerate(small_fleet.records):
            key = (r.product_key, r.entry_weekday_hour, r.priority, r.config_variants,
                   r.inspection_codes, r.parking_locations)
            sig.setdefault(key, set()).add(tuple(ds.row(i).tolist()))
        rows = [next(iter(s)) for s in sig.values()]
        assert all(len(s) == 1 for s in sig.values())
        assert len(set(rows)) == len(rows)


def _random_ds(data):
    n = data.draw(st.integers(1, 12))
    m = data.draw(st.integers(1, 8))
    X = np.array(data.draw(st.lists(st.lists(st.integers(0, 1), min_size=m, max_size=m),
                                    min_size=n, max_size=n)))
    return X, dense_dataset(X)


class TestPrune:
    def test_drop_zero_column(self):
        ds = prune_null_columns(dense_dataset([[1, 0], [1, 0]]))
        assert ds.to_dense().tolist() == [[1], [1]] and ds.vocabulary.names == ("f:0",)

    def test_identity(self):
        ds = dense_dataset([[1, 0], [0, 1]])
        assert prune_null_columns(ds) is ds

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_properties(self, data):
        X, ds = _random_ds(data)
        p = prune_null_columns(ds)
        keep = X.sum(axis=0) > 0
        assert np.array_equal(p.to_dense(), X[:, keep])
        assert p.vocabulary.names == tuple(n for n, k in zip(ds.vocabulary.names, keep) if k)
        assert np.all(p.column_counts() > 0)
        q = prune_null_columns(p)
        assert np.array_equal(q.indices, p.indices) and q.vocabulary == p.vocabulary


class TestDatasetContainer:
    def test_labels_and_subset(self, small_fleet):
        ds = encode(small_fleet, build_vocabulary(small_fleet, "limited")).with_labels(scheme_for(3))
        sub = ds.subset([5, 1, 2])
        assert sub.row_ids == (ds.row_ids[5], ds.row_ids[1], ds.row_ids[2])
        assert np.array_equal(sub.to_dense(), ds.to_dense()[[5, 1, 2]])
        assert sub.labels.tolist() == ds.labels[[5, 1, 2]].tolist()

    def test_save_load(self, small_fleet, tmp_path):
        ds = encode(small_fleet, build_vocabulary(small_fleet, "unlimited")).with_labels(scheme_for(4))
        ds.save(tmp_path / "d.json")
        back = EncodedDataset.load(tmp_path / "d.json")
        assert back.vocabulary == ds.vocabulary and back.scheme == ds.scheme
        assert np.array_equal(back.indptr, ds.indptr) and np.array_equal(back.indices, ds.indices)
        assert np.array_equal(back.labels, ds.labels)
        assert np.array_equal(back.lead_times, ds.lead_times)
