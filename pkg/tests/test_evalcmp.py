import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import make_record
from tfclead import evalcmp, synthgen
from tfclead.errors import DataError
from tfclead.evalcmp import baseline_predict, compare_predictions, evaluate, fit_baseline
from tfclead.labeling import scheme_for
from tfclead.pipeline import fit, prepare


class TestMetrics:
    def test_perfect(self):
        m = evaluate([0, 1, 2, 1], [0, 1, 2, 1], 3)
        assert m.accuracy == 1.0 and m.macro_f1 == 1.0
        assert np.array_equal(m.confusion, np.diag([1, 2, 1]))

    def test_hand_count(self):
        assert evaluate([0, 0, 1, 1], [0, 1, 1, 1], 2).accuracy == 0.75

    def test_constant_prediction_macro_f1(self):
        m = evaluate([0] * 100, [0] * 60 + [1] * 40, 2)
        assert m.accuracy == pytest.approx(0.6)
        # class 0: precision 0.6, recall 1, F1 0.75; class 1 contributes 0
        assert m.macro_f1 == pytest.approx(0.375, abs=1e-12)

    def test_confusion_rows_are_true_class(self):
        m = evaluate([1, 1], [0, 0], 2)
        assert m.confusion.tolist() == [[0, 2], [0, 0]]
        assert m.confusion_csv().splitlines()[1].endswith("0,2")

    @pytest.mark.parametrize("pred,true", [([0], [0, 1]), ([], [])])
    def test_bad_input(self, pred, true):
        with pytest.raises(DataError):
            evaluate(pred, true, 2)

    @given(st.integers(2, 6).flatmap(lambda k: st.tuples(
        st.just(k),
        st.lists(st.tuples(st.integers(0, k - 1), st.integers(0, k - 1)), min_size=1, max_size=200))))
    def test_identities(self, case):
        k, pairs = case
        pred, true = map(np.array, zip(*pairs))
        m = evaluate(pred, true, k)
        assert m.confusion.sum() == len(pred) and np.all(m.confusion >= 0)
        assert abs(m.accuracy - np.mean(pred == true)) <= 1e-12
        assert abs(m.accuracy - np.trace(m.confusion) / m.confusion.sum()) <= 1e-12
        rows = m.confusion.sum(axis=1)
        for c in range(k):
            if rows[c]:
                assert m.recall[c] == m.confusion[c, c] / rows[c]
        assert abs(m.macro_f1 - m.f1.mean()) <= 1e-15

    def test_text_table(self):
        text = evaluate([0, 1], [0, 1], 2).text_table(["a", "b"])
        assert "accuracy 1.0000" in text and "a" in text


class TestBaseline:
    def test_median_rule(self):
        hist = [make_record(f"V{i}", lead_time_days=t) for i, t in enumerate((0.5, 0.9, 5.0))]
        b = fit_baseline(hist, scheme_for(2))
        assert b.planned == {"A10IC": 0}
        assert baseline_predict(b, ["A10IC"]).tolist() == [0]

    def test_unseen_key_fallback(self):
        hist = [make_record("a", lead_time_days=0.2), make_record("b", product_key="E10EV", lead_time_days=9.0),
                make_record("c", product_key="E10EV", lead_time_days=8.0)]
        b = fit_baseline(hist, scheme_for(3))
        assert b.fallback == 2  # global median 8 days
        assert baseline_predict(b, [make_record("x", product_key="Z99")]).tolist() == [2]

    def test_empty_history(self):
        with pytest.raises(DataError):
            fit_baseline([], scheme_for(2))

    def test_frozen_after_fit(self, small_fleet):
        b = fit_baseline(small_fleet, scheme_for(4))
        before = baseline_predict(b, small_fleet.records)
        more = synthgen.generate_fleet(synthgen.GeneratorConfig(n_vehicles=500, seed=99))
        baseline_predict(b, more)
        assert np.array_equal(baseline_predict(b, small_fleet.records), before)
        with pytest.raises(dataclasses.FrozenInstanceError):
            b.fallback = 1


class TestCompare:
    def test_identical_systems(self):
        c = compare_predictions([0, 1, 1], [0, 1, 1], [0, 1, 0], 2)
        assert c.delta_points == 0.0 and c.delta_relative_pct == 0.0

    def test_deltas(self):
        c = compare_predictions([0, 1, 1, 1], [0, 0, 0, 0], [0, 1, 1, 1], 2)
        assert c.delta_points == pytest.approx(75.0)
        assert c.delta_relative_pct == pytest.approx(300.0)
        assert "delta (points)" in c.text_table()

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_model_beats_baseline(self, default_fleet, k):
        prep = prepare(default_fleet, "unlimited", scheme_for(k))
        f = fit(prep.dataset)
        baseline = fit_baseline([prep.table.records[i] for i in f.split.train], scheme_for(k))
        c = evalcmp.compare_systems(f.model, baseline, f.test, [prep.table.records[i] for i in f.split.test])
        assert c.delta_points > 0 and c.n_vehicles == f.test.n_rows
        assert c.model.accuracy > c.baseline.accuracy

    def test_scheme_mismatch(self, small_fleet):
        prep = prepare(small_fleet, "limited", scheme_for(2))
        f = fit(prep.dataset)
        with pytest.raises(DataError):
            evalcmp.compare_systems(f.model, fit_baseline(small_fleet, scheme_for(3)), f.test,
                                    [prep.table.records[i] for i in f.split.test])


class TestDrift:
    def test_no_change_control(self):
        rep = evalcmp.drift_experiment(synthgen.GeneratorConfig(), magnitude=0.0)
        assert abs(rep.stale_accuracy - rep.pre_change_accuracy) <= 0.02
        assert rep.n_classes == 3

    def test_accuracy_by_classes_rows(self, small_fleet):
        rows = evalcmp.accuracy_by_classes(small_fleet, [2, 3], ["limited"])
        assert [(r["feature_set"], r["classes"]) for r in rows] == [("limited", 2), ("limited", 3)]
        assert all(0 <= r["accuracy"] <= 1 for r in rows)
