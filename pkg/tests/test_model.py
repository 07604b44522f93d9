from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wikichurn.errors import LayoutMismatch, SchemaMismatch, SingleClass, TooSmall
from wikichurn.model import (
    DEFAULT_COMBOS,
    KINDS,
    EvalReport,
    Hyperparams,
    RiskScore,
    SplitSpec,
    flag,
    load_model,
    report_from_confusion,
    save_model,
    score_editors,
    split,
    train,
)
from wikichurn.model.ablation import AblationRow, _best, write_ablation_csv
from wikichurn.model.evaluation import confusion_matrix
from wikichurn.model.io import dumps_model, loads_model
from wikichurn.model.ensemble import adaboost_alpha, _sigmoid
from wikichurn.model.tree import LEAF, grow_tree
from wikichurn.synthetic import signal_matrix

FAST = Hyperparams(n_estimators=15, max_depth=4)


def gini(y, w):
    tw = w.sum()
    if tw == 0:
        return 0.0
    p = (w * y).sum() / tw
    return 2 * p * (1 - p)


def brute_force_root(X, y, min_leaf=1):
    """Lowest weighted child Gini over every (feature, observed threshold)."""
    w = np.ones(len(y))
    best = math.inf
    for j in range(X.shape[1]):
        for thr in np.unique(X[:, j])[:-1]:
            left = X[:, j] <= thr
            if left.sum() < min_leaf or (~left).sum() < min_leaf:
                continue
            cost = left.sum() * gini(y[left], w[left]) + (~left).sum() * gini(y[~left], w[~left])
            best = min(best, cost)
    return best


class TestTree:
    def test_perfect_split(self):
        X = np.array([[1.0], [2.0], [3.0], [10.0], [11.0]])
        y = np.array([0, 0, 0, 1, 1])
        t = grow_tree(X, y, min_leaf=1)
        assert t.feature[0] == 0 and t.threshold[0] == 3.0
        assert t.predict(X).tolist() == y.tolist()

    def test_pure_node_is_leaf(self):
        t = grow_tree(np.ones((4, 2)), np.zeros(4))
        assert t.n_nodes == 1 and t.feature[0] == LEAF

    def test_depth_limit(self):
        X, y, _ = signal_matrix(200, seed=3)
        assert grow_tree(X, y, max_depth=3).depth <= 3

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6), st.integers(0, 1)), min_size=4, max_size=25))
    def test_root_split_is_gini_optimal(self, rows):
        X = np.array([[a, b] for a, b, _ in rows], dtype=float)
        y = np.array([c for *_, c in rows], dtype=float)
        t = grow_tree(X, y, max_depth=1, min_leaf=1)
        oracle = brute_force_root(X, y)
        if t.feature[0] == LEAF:
            assert oracle == math.inf or oracle >= len(y) * gini(y, np.ones(len(y))) - 1e-9
            return
        left = X[:, t.feature[0]] <= t.threshold[0]
        cost = left.sum() * gini(y[left], np.ones(left.sum())) + (~left).sum() * gini(y[~left], np.ones((~left).sum()))
        assert cost == pytest.approx(oracle, abs=1e-9)

    def test_monotone_transform_invariance(self):
        X, y, _ = signal_matrix(150, seed=4)
        t1 = grow_tree(X, y)
        t2 = grow_tree(np.exp(X), y)
        assert np.array_equal(t1.predict(X), t2.predict(np.exp(X)))

    def test_sample_weight_zero_ignores_rows(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0, 1, 0, 1])
        t = grow_tree(X, y, np.array([1.0, 0.0, 1.0, 1.0]), min_leaf=1)
        assert t.predict(np.array([[3.0]]))[0] == 1.0


class TestEnsembles:
    @pytest.mark.parametrize("kind", KINDS)
    def test_learns_signal(self, kind):
        X, y, _ = signal_matrix(400, seed=11, separation=1.8)
        m = train(kind, X[:300], y[:300], FAST, seed=2)
        assert (m.predict(X[300:]) == y[300:]).mean() >= 0.9
        p = m.predict_proba(X)
        assert p.min() >= 0.0 and p.max() <= 1.0

    def test_forest_soft_vote(self):
        X, y, _ = signal_matrix(100, seed=1)
        m = train("forest", X, y, FAST, seed=0)
        mean = np.mean([t.predict(X) for t in m.trees], axis=0)
        assert np.allclose(m.predict_proba(X), mean)

    def test_adaboost_probability(self):
        X, y, _ = signal_matrix(100, seed=1)
        m = train("adaboost", X, y, FAST)
        margin = sum(a * np.where(t.predict(X) > 0.5, 1, -1) for t, a in zip(m.trees, m.tree_weights))
        assert np.allclose(m.predict_proba(X), 1 / (1 + np.exp(-2 * margin)))
        assert all(t.depth <= 1 for t in m.trees)

    def test_adaboost_alpha(self):
        assert adaboost_alpha(0.25) == pytest.approx(0.5 * math.log(3))
        assert adaboost_alpha(0.5) == 0.0
        assert math.isfinite(adaboost_alpha(0.0))

    def test_gboost_init_is_log_odds(self):
        X, y, _ = signal_matrix(100, seed=1)
        m = train("gboost", X, y, Hyperparams(n_estimators=3))
        assert m.init_score == pytest.approx(math.log(y.mean() / (1 - y.mean())))
        assert m.learning_rate == 0.1

    def test_seed_determinism(self):
        X, y, _ = signal_matrix(120, seed=5)
        a = train("forest", X, y, FAST, seed=9)
        b = train("forest", X, y, FAST, seed=9, workers=4)
        c = train("forest", X, y, FAST, seed=10)
        assert a.to_dict() == b.to_dict()
        assert a.to_dict() != c.to_dict()

    def test_single_class(self):
        with pytest.raises(SingleClass):
            train("tree", np.ones((5, 2)), np.zeros(5))

    def test_non_finite(self):
        X = np.ones((4, 2))
        X[0, 0] = np.nan
        with pytest.raises(ValueError):
            train("tree", X, np.array([0, 1, 0, 1]))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            train("svm", np.ones((4, 1)), np.array([0, 1, 0, 1]))

    def test_layout_mismatch(self):
        X, y, _ = signal_matrix(50, seed=1)
        m = train("tree", X, y)
        with pytest.raises(LayoutMismatch):
            m.predict(X[:, :3])

    def test_hyperparams(self):
        assert Hyperparams().resolve_max_features(16) == 4
        assert Hyperparams(max_features="log2").resolve_max_features(16) == 4
        assert Hyperparams(max_features=99).resolve_max_features(16) == 16
        with pytest.raises(ValueError):
            Hyperparams.from_dict({"depth": 3})

    def test_sigmoid_stable(self):
        assert _sigmoid(np.array([-1000.0, 0.0, 1000.0])).tolist() == [0.0, 0.5, 1.0]


class TestSplit:
    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 40), st.integers(0, 40), st.integers(0, 1000), st.booleans())
    def test_partition(self, n0, n1, seed, stratified):
        y = np.array([0] * n0 + [1] * n1)
        if len(y) < 5:
            with pytest.raises(TooSmall):
                split(y, SplitSpec(seed=seed, stratified=stratified))
            return
        tr, te = split(y, SplitSpec(seed=seed, stratified=stratified))
        assert sorted(np.concatenate([tr, te]).tolist()) == list(range(len(y)))
        assert len(te) == min(max(round(0.2 * len(y)), 1), len(y) - 1)
        if stratified:
            for c, nc in ((0, n0), (1, n1)):
                assert abs((y[te] == c).sum() - nc * len(te) / len(y)) < 1.0

    def test_reproducible(self):
        y = np.array([0, 1] * 20)
        assert all(np.array_equal(a, b) for a, b in zip(split(y, SplitSpec(seed=3)), split(y, SplitSpec(seed=3))))

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            SplitSpec(train_fraction=1.0)


class TestMetrics:
    def test_hand_computed(self):
        # rows true 0/1, cols predicted 0/1
        r = report_from_confusion([[3, 1], [2, 4]])
        p0, p1 = 3 / 5, 4 / 5
        r0, r1 = 3 / 4, 4 / 6
        f0 = 2 * p0 * r0 / (p0 + r0)
        f1 = 2 * p1 * r1 / (p1 + r1)
        assert r.accuracy == pytest.approx(0.7)
        assert r.weighted_precision == pytest.approx((4 * p0 + 6 * p1) / 10)
        assert r.weighted_recall == pytest.approx((4 * r0 + 6 * r1) / 10)
        assert r.weighted_f1 == pytest.approx((4 * f0 + 6 * f1) / 10)
        assert r.n == 10

    def test_zero_denominators(self):
        r = report_from_confusion([[5, 0], [5, 0]])
        assert r.accuracy == 0.5
        assert r.weighted_precision == pytest.approx(0.25)
        assert r.weighted_f1 == pytest.approx(0.5 * (2 * 0.5 * 1 / 1.5))

    def test_confusion(self):
        assert confusion_matrix([0, 1, 1, 0], [0, 1, 0, 0]).tolist() == [[2, 0], [1, 1]]

    def test_round_trip(self):
        r = report_from_confusion([[3, 1], [2, 4]])
        assert EvalReport.from_dict(json.loads(json.dumps(r.to_dict()))) == r


class TestScoring:
    def test_order_and_strict_threshold(self):
        X, y, _ = signal_matrix(60, seed=2)
        m = train("tree", X, y)
        scores = score_editors(m, X[:5], ["e", "d", "c", "b", "a"])
        probs = [s.probability for s in scores]
        assert probs == sorted(probs, reverse=True)
        edge = [RiskScore("a", 0.8), RiskScore("b", 0.8000001), RiskScore("c", 0.5)]
        assert [s.editor for s in flag(edge)] == ["b"]
        assert flag(edge, 0.0) == edge

    def test_empty(self):
        X, y, _ = signal_matrix(60, seed=2)
        assert score_editors(train("tree", X, y), np.zeros((0, X.shape[1])), []) == []

    def test_row_count(self):
        X, y, _ = signal_matrix(60, seed=2)
        with pytest.raises(ValueError):
            score_editors(train("tree", X, y), X[:3], ["a"])


class TestAblationPieces:
    def test_grid(self):
        assert len(DEFAULT_COMBOS) == 13
        assert ("G1", "G4", "G5") in DEFAULT_COMBOS

    def test_best_tie_break(self):
        a = report_from_confusion([[3, 1], [1, 3]])
        b = report_from_confusion([[4, 0], [2, 2]])
        assert a.accuracy == b.accuracy
        best = _best({"tree": b, "forest": a, "adaboost": a, "gboost": b}, KINDS)
        assert best == ("forest" if a.weighted_f1 > b.weighted_f1 else "tree")
        assert _best({"tree": a, "forest": a, "adaboost": a, "gboost": a}, ["gboost", "forest"]) == "forest"

    def test_csv(self, tmp_path):
        r = report_from_confusion([[3, 1], [2, 4]])
        rows = [AblationRow(("G1",), "forest", r), AblationRow(("G3",), None, None, skipped="no encoder")]
        write_ablation_csv(tmp_path / "a.csv", rows)
        lines = (tmp_path / "a.csv").read_text().splitlines()
        assert lines[0] == "features,classifier,precision,recall,f-score,accuracy"
        assert lines[1].startswith("G1,Random Forest,") and lines[1].endswith(",0.7000")
        assert lines[2] == "G3,skipped,,,,"


class TestModelIO:
    @pytest.mark.parametrize("kind", KINDS)
    def test_round_trip_bit_identical(self, tmp_path, kind):
        X, y, _ = signal_matrix(120, seed=8)
        m = train(kind, X, y, FAST, seed=1)
        save_model(tmp_path / "m.json", m, {"seed": 1})
        back, header = load_model(tmp_path / "m.json")
        assert header == {"seed": 1}
        assert np.array_equal(back.predict_proba(X), m.predict_proba(X))

    def test_major_version_checked(self):
        X, y, _ = signal_matrix(40, seed=8)
        doc = json.loads(dumps_model(train("tree", X, y)))
        doc["format_version"] = "1.7"
        loads_model(json.dumps(doc))
        doc["format_version"] = "2.0"
        with pytest.raises(SchemaMismatch):
            loads_model(json.dumps(doc))
        with pytest.raises(SchemaMismatch):
            loads_model('{"format": "other"}')
