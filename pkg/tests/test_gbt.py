import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from isiamids.gbt import GbtConfig, GbtModel, Tree, find_best_split, midpoint, train_binary, train_multiclass
from oracles import split_agrees


def blobs(n_per=40, seed=0):
    rng = np.random.default_rng(seed)
    centers = np.array([[0.2, 0.2], [0.8, 0.2], [0.5, 0.8]])
    X = np.concatenate([c + 0.06 * rng.standard_normal((n_per, 2)) for c in centers])
    y = np.repeat(np.arange(3), n_per)
    return X, y


@st.composite
def split_problems(draw):
    n = draw(st.integers(2, 50))
    d = draw(st.integers(1, 3))
    coarse = draw(st.booleans())
    elems = st.integers(0, 4).map(float) if coarse else st.floats(-10, 10, allow_nan=False, width=32)
    X = draw(hnp.arrays(np.float64, (n, d), elements=elems))
    g = draw(hnp.arrays(np.float64, n, elements=st.floats(-1, 1, width=32)))
    h = draw(hnp.arrays(np.float64, n, elements=st.floats(0.0625, 0.25, width=32)))
    cfg = GbtConfig(l2_penalty=draw(st.sampled_from([0.0, 1.0, 2.5])),
                    split_penalty=draw(st.sampled_from([0.0, 0.05])),
                    min_child_hessian=draw(st.sampled_from([0.0, 0.1, 1.0])))
    return X, g, h, cfg


class TestSplitSearch:
    @given(split_problems())
    def test_matches_brute_force(self, problem):
        X, g, h, cfg = problem
        split = find_best_split(X, g, h, cfg)
        ok, _ = split_agrees(split, X, g, h, cfg.l2_penalty, cfg.split_penalty, cfg.min_child_hessian)
        assert ok

    def test_tie_prefers_lowest_feature_then_threshold(self):
        # both features are identical, and the gradient is symmetric in the two
        # possible cut points of each, so four candidates tie exactly
        X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
        g = np.array([1.0, 0.0, -1.0])
        h = np.ones(3)
        split = find_best_split(X, g, h, GbtConfig(l2_penalty=0.0, min_child_hessian=0.0))
        assert (split.feature, split.threshold) == (0, 0.5)

    def test_constant_feature_gives_no_split(self):
        assert find_best_split(np.ones((5, 1)), np.arange(5.0), np.ones(5)) is None

    def test_negative_gain_not_taken(self):
        X = np.array([[0.0], [1.0]])
        split = find_best_split(X, np.array([1.0, -1.0]), np.ones(2),
                                GbtConfig(min_child_hessian=0.0, split_penalty=10.0))
        assert split is None

    @pytest.mark.parametrize("lo, hi", [(0.0, 1.0), (1.0, np.nextafter(1.0, 2.0)), (-3.0, -2.5)])
    def test_midpoint_separates(self, lo, hi):
        t = midpoint(lo, hi)
        assert lo < t <= hi


class TestTraining:
    def test_toy_separable(self):
        X = np.array([[-1.0], [-0.5], [0.5], [1.0]])
        y = np.array([0, 0, 1, 1])
        model = train_binary(X, y, GbtConfig(rounds=20, max_depth=1, min_child_hessian=0.0))
        assert np.mean(model.predict_label(X) == y) == 1.0

    def test_toy_needs_no_hessian_floor_to_split(self):
        # with the default floor of 1 a 2-sample child (hessian 0.5) is not admissible
        X = np.array([[-1.0], [-0.5], [0.5], [1.0]])
        y = np.array([0, 0, 1, 1])
        model = train_binary(X, y, GbtConfig(rounds=20, max_depth=1))
        assert all(t.n_nodes == 1 for (t,) in model.trees)

    def test_three_blobs(self):
        X, y = blobs()
        model = train_multiclass(X, y, 3, GbtConfig(rounds=30, max_depth=3))
        assert np.mean(model.predict_label(X) == y) >= 0.99
        assert model.tree_count == 30 * 3

    def test_binary_tree_count(self):
        X, y = blobs()
        model = train_binary(X, (y == 2).astype(int), GbtConfig(rounds=7, max_depth=2))
        assert model.tree_count == 7

    def test_two_class_multiclass_is_binary(self):
        X, y = blobs()
        model = train_multiclass(X, (y == 1).astype(int), 2, GbtConfig(rounds=3))
        assert model.n_margins == 1 and model.tree_count == 3

    @pytest.mark.parametrize("rounds", [1, 5, 25])
    def test_loss_non_increasing(self, rounds):
        X, y = blobs(seed=rounds)
        for model in (train_binary(X, (y == 0).astype(int), GbtConfig(rounds=rounds, max_depth=3)),
                      train_multiclass(X, y, 3, GbtConfig(rounds=rounds, max_depth=3))):
            hist = np.array(model.loss_history)
            assert len(hist) == rounds + 1
            assert np.all(np.diff(hist) <= 1e-12)

    def test_depth_bound(self):
        X, y = blobs()
        model = train_multiclass(X, y, 3, GbtConfig(rounds=5, max_depth=2, min_child_hessian=0.0))
        assert max(t.depth() for r in model.trees for t in r) <= 2

    def test_single_leaf_weight(self):
        # a constant feature admits no split, so round one is a single leaf
        rng = np.random.default_rng(3)
        y = rng.integers(0, 2, 30)
        y[:2] = [0, 1]
        model = train_binary(np.zeros((30, 1)), y, GbtConfig(rounds=1, l2_penalty=1.0))
        p = np.full(30, 0.5)
        G = float(sum(p - y))
        H = float(sum(p * (1 - p)))
        assert model.trees[0][0].n_nodes == 1
        assert abs(model.trees[0][0].weight[0] - (-G / (H + 1.0))) <= 1e-10

    def test_second_round_fits_residuals(self):
        X, y = blobs()
        yb = (y == 1).astype(int)
        cfg = GbtConfig(rounds=2, max_depth=2)
        model = train_binary(X, yb, cfg)
        F1 = cfg.learning_rate * model.trees[0][0].predict(X)
        p = 1 / (1 + np.exp(-F1))
        g, h = p - yb, p * (1 - p)
        second = model.trees[1][0]
        leaves = second.apply(X)
        for leaf in np.unique(leaves):
            rows = leaves == leaf
            assert second.weight[leaf] == pytest.approx(-g[rows].sum() / (h[rows].sum() + 1.0), abs=1e-10)

    @pytest.mark.parametrize("X, y", [
        (np.zeros((3, 1)), np.array([1, 1, 1])),
        (np.zeros((0, 1)), np.zeros(0, int)),
        (np.zeros((2, 1)), np.array([0, 2])),
    ])
    def test_binary_errors(self, X, y):
        with pytest.raises(ValueError):
            train_binary(X, y)

    def test_multiclass_empty_class(self):
        X, y = blobs()
        with pytest.raises(ValueError, match="class 3"):
            train_multiclass(X, y, 4)

    def test_multiclass_needs_two(self):
        with pytest.raises(ValueError):
            train_multiclass(np.zeros((3, 1)), np.zeros(3, int), 1)

    @pytest.mark.parametrize("kwargs", [dict(rounds=0), dict(max_depth=0), dict(learning_rate=0.0),
                                        dict(learning_rate=1.5), dict(l2_penalty=-1), dict(split_penalty=-1)])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            GbtConfig(**kwargs)


def stump(weight_left=-2.0, weight_right=2.0, threshold=0.0):
    return Tree(np.array([0, -1, -1], np.int32), np.array([threshold, 0.0, 0.0]),
                np.array([1, -1, -1], np.int32), np.array([2, -1, -1], np.int32),
                np.array([0.0, weight_left, weight_right]))


class TestPrediction:
    def test_hand_built_tree(self):
        model = GbtModel(2, 1, GbtConfig(learning_rate=1.0), 0.0, [[stump()]])
        expected = 1.0 / (1.0 + math.exp(2.0))
        assert model.predict_score(np.array([-1.0]))[1] == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(0.11920292202211755, abs=1e-15)
        assert model.predict_score(np.array([0.0]))[1] == pytest.approx(1 - expected, abs=1e-15)

    def test_zero_trees(self):
        model = GbtModel(2, 3, GbtConfig(), 0.0, [])
        np.testing.assert_array_equal(model.predict_score(np.zeros(3)), [0.5, 0.5])
        assert model.predict_label(np.zeros(3)) == 0

    def test_argmax_tie_to_lowest(self):
        model = GbtModel(4, 1, GbtConfig(), 0.0, [])
        assert model.predict_label(np.zeros(1)) == 0

    def test_dimension_mismatch(self):
        model = GbtModel(2, 3, GbtConfig(), 0.0, [])
        with pytest.raises(ValueError):
            model.predict_score(np.zeros(4))

    @given(hnp.arrays(np.float64, (20, 2), elements=st.floats(-3, 3)))
    def test_probability_vectors(self, Xq):
        P = _BLOB_MODEL.predict_score(Xq)
        assert np.all((P >= 0) & (P <= 1))
        assert np.all(np.abs(P.sum(axis=1) - 1) <= 1e-9)


_BLOB_MODEL = train_multiclass(*blobs(n_per=15, seed=1), 3, GbtConfig(rounds=10, max_depth=3))


class TestSerialization:
    def test_deterministic_and_round_trip(self, tmp_path):
        X, y = blobs()
        cfg = GbtConfig(rounds=6, max_depth=3, seed=9)
        d1 = train_multiclass(X, y, 3, cfg).save(tmp_path / "a.gbt")
        d2 = train_multiclass(X, y, 3, cfg).save(tmp_path / "b.gbt")
        assert d1 == d2
        back = GbtModel.load(tmp_path / "a.gbt")
        np.testing.assert_array_equal(back.predict_score(X), train_multiclass(X, y, 3, cfg).predict_score(X))
        assert back.loss_history == train_multiclass(X, y, 3, cfg).loss_history

    def test_binary_round_trip(self, tmp_path):
        X, y = blobs()
        m = train_binary(X, (y == 0).astype(int), GbtConfig(rounds=4))
        m.save(tmp_path / "b.gbt")
        np.testing.assert_array_equal(GbtModel.load(tmp_path / "b.gbt").predict_score(X), m.predict_score(X))
