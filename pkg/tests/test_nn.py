import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isiamids.nn import (CLASSIFIER, EMBEDDING, LINEAR, AdamState, DivergenceError, LayerSpec, Mlp, TrainConfig,
                         cross_entropy_from_logits, train)
from oracles import central_difference, relative_error


def random_net(rng, mode=CLASSIFIER):
    n_in = int(rng.integers(1, 6))
    hidden = [int(w) for w in rng.integers(1, 9, size=rng.integers(0, 3))]
    n_out = int(rng.integers(2, 5))
    net = Mlp.build(n_in, hidden, n_out, mode, seed=int(rng.integers(1 << 30)))
    for b in net.biases:
        b[:] = rng.normal(0, 0.5, b.shape)
    return net


def classifier_gradient_error(net, rng, batch=5):
    X = rng.normal(size=(batch, net.n_in))
    y = rng.integers(0, net.n_out, batch)
    P, cache = net.forward(X, training=True, rng=rng)
    grad = P.copy()
    grad[np.arange(batch), y] -= 1.0
    analytic = net.backward(cache, grad / batch)
    numeric = central_difference(lambda: cross_entropy_from_logits(net.logits(X), y), net.params)
    return relative_error(analytic, numeric)


def embedding_gradient_error(net, rng, batch=4):
    X = rng.normal(size=(batch, net.n_in))
    R = rng.normal(size=(batch, net.n_out))
    _, cache = net.forward(X, training=True, rng=rng)
    analytic = net.backward(cache, R)
    numeric = central_difference(lambda: float(np.sum(net.logits(X) * R)), net.params)
    return relative_error(analytic, numeric)


def separable(n=400, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, 4))
    y = (X[:, 0] + X[:, 1] > 1.0).astype(int)
    keep = np.abs(X[:, 0] + X[:, 1] - 1.0) > 0.05
    return X[keep], y[keep]


class TestGradients:
    @pytest.mark.parametrize("seed", range(10))
    def test_classifier_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        assert classifier_gradient_error(random_net(rng), rng) <= 1e-4

    @pytest.mark.parametrize("seed", range(5))
    def test_embedding_finite_differences(self, seed):
        rng = np.random.default_rng(100 + seed)
        assert embedding_gradient_error(random_net(rng, EMBEDDING), rng) <= 1e-4

    def test_4_8_3(self):
        rng = np.random.default_rng(7)
        net = Mlp.build(4, [8], 3, seed=7)
        assert classifier_gradient_error(net, rng, batch=6) <= 1e-4

    def test_hand_computed_linear_layer(self):
        net = Mlp([LayerSpec(2, 2, LINEAR)], EMBEDDING, [np.array([[1.0, 2.0], [3.0, 4.0]])], [np.array([0.5, -0.5])])
        x = np.array([[1.0, -1.0]])
        target = np.array([[-2.0, -3.0]])
        pred, cache = net.forward(x, training=True, rng=np.random.default_rng(0))
        np.testing.assert_array_equal(pred, [[-1.5, -2.5]])
        dW, db = net.backward(cache, 2.0 * (pred - target))
        np.testing.assert_array_equal(dW, [[1.0, 1.0], [-1.0, -1.0]])
        np.testing.assert_array_equal(db, [1.0, 1.0])

    def test_zero_upstream_gradient(self):
        rng = np.random.default_rng(1)
        net = Mlp.build(3, [5, 4], 2, seed=1)
        _, cache = net.forward(rng.random((4, 3)), training=True, rng=rng)
        assert all(not g.any() for g in net.backward(cache, np.zeros((4, 2))))

    def test_stale_cache(self):
        rng = np.random.default_rng(2)
        net = Mlp.build(3, [4], 2, seed=2)
        _, cache = net.forward(rng.random((2, 3)), training=True, rng=rng)
        net.bump()
        with pytest.raises(ValueError, match="stale"):
            net.backward(cache, np.zeros((2, 2)))

    def test_missing_cache(self):
        net = Mlp.build(3, [4], 2)
        _, cache = net.forward(np.zeros((1, 3)))
        with pytest.raises(ValueError):
            net.backward(cache, np.zeros((1, 2)))


class TestForward:
    def test_zero_weights_uniform(self):
        net = Mlp.build(5, [4], 2)
        for w in net.weights:
            w[:] = 0
        np.testing.assert_array_equal(net.predict_proba(np.random.default_rng(0).random((3, 5))), 0.5)

    def test_inference_ignores_rng(self):
        net = Mlp.build(5, [8], 3, dropout=0.5, input_dropout=0.5, seed=3)
        X = np.random.default_rng(0).random((4, 5))
        a, _ = net.forward(X, rng=np.random.default_rng(1))
        b, _ = net.forward(X, rng=np.random.default_rng(2))
        np.testing.assert_array_equal(a, b)

    def test_dropout_expectation(self):
        rng = np.random.default_rng(4)
        net = Mlp([LayerSpec(6, 3, LINEAR, dropout=0.3)], EMBEDDING, [rng.uniform(0.5, 1.5, (6, 3))], [np.zeros(3)])
        x = rng.uniform(0.5, 1.0, 6)
        out, _ = net.forward(np.tile(x, (10_000, 1)), training=True, rng=rng)
        expected = x @ net.weights[0]
        np.testing.assert_allclose(out.mean(axis=0), expected, rtol=0.02)

    def test_layer_one_architecture(self):
        net = Mlp.build(41, (1024, 512, 256, 128, 64), 2, dropout=0.1)
        assert [l.n_out for l in net.layers] == [1024, 512, 256, 128, 64, 2]
        assert [l.dropout for l in net.layers] == [0.0] + [0.1] * 5
        assert net.layers[-1].activation == LINEAR

    @given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4))
    def test_softmax_normalized(self, row):
        P = _NET.predict_proba(np.array(row))
        assert abs(P.sum() - 1.0) <= 1e-9 and np.all((P >= 0) & (P <= 1))

    def test_width_mismatch(self):
        with pytest.raises(ValueError, match="width"):
            _NET.predict_proba(np.zeros(3))

    def test_mode_misuse(self):
        with pytest.raises(ValueError):
            _NET.embed(np.zeros(4))
        with pytest.raises(ValueError):
            Mlp.build(4, [3], 2, EMBEDDING).predict_proba(np.zeros(4))

    def test_argmax_tie(self):
        net = Mlp.build(2, [], 3)
        net.weights[0][:] = 0
        assert net.predict_label(np.zeros(2)) == 0

    @pytest.mark.parametrize("spec", [dict(n_in=0, n_out=1), dict(n_in=1, n_out=1, dropout=1.0),
                                      dict(n_in=1, n_out=1, activation="relu")])
    def test_layer_validation(self, spec):
        with pytest.raises(ValueError):
            LayerSpec(**spec)

    def test_width_chain_validation(self):
        with pytest.raises(ValueError):
            Mlp([LayerSpec(2, 3), LayerSpec(4, 2)])


_NET = Mlp.build(4, [6, 5], 3, seed=11)


class TestTraining:
    def test_separable_toy(self):
        X, y = separable()
        net = Mlp.build(4, [16], 2, seed=0)
        history = train(net, X, y, TrainConfig(epochs=20, batch_size=16, lr=0.01, seed=0))
        assert len(history) == 20
        assert np.mean(net.predict_label(X) == y) >= 0.99

    def test_seeded_determinism(self):
        X, y = separable(seed=1)
        runs = []
        for _ in range(2):
            net = Mlp.build(4, [8], 2, dropout=0.1, seed=5)
            runs.append((train(net, X, y, TrainConfig(epochs=3, batch_size=32, seed=9)), net))
        assert runs[0][0] == runs[1][0]
        for a, b in zip(runs[0][1].params, runs[1][1].params):
            np.testing.assert_array_equal(a, b)

    def test_divergence_names_epoch(self):
        X, y = separable(seed=2)
        net = Mlp.build(4, [8], 2, seed=5)
        net.biases[0][0] = np.nan
        with pytest.raises(DivergenceError, match="epoch 0"):
            train(net, X, y, TrainConfig(epochs=2))

    def test_bad_labels(self):
        with pytest.raises(ValueError):
            train(Mlp.build(2, [], 2), np.zeros((2, 2)), np.array([0, 2]))

    @pytest.mark.parametrize("kwargs", [dict(epochs=-1), dict(batch_size=0), dict(lr=0.0), dict(beta1=1.0)])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)

    def test_adam_first_step(self):
        p = np.zeros(2)
        AdamState(lr=0.01).step([p], [np.array([2.0, -3.0])])
        np.testing.assert_allclose(p, [-0.01, 0.01], rtol=1e-6)


class TestSerialization:
    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_round_trip(self, tmp_path, dtype):
        net = Mlp.build(4, [6, 5], 3, dropout=0.2, seed=1, dtype=dtype)
        d1 = net.save(tmp_path / "a.mlp")
        back = Mlp.load(tmp_path / "a.mlp")
        assert back.save(tmp_path / "b.mlp") == d1
        X = np.random.default_rng(0).random((7, 4))
        np.testing.assert_array_equal(back.predict_proba(X), net.predict_proba(X))
        assert back.layers == net.layers and back.dtype == net.dtype
