import math

import numpy as np
import pytest

from abprune import (
    Dataset,
    TrainConfig,
    TrainingDivergedError,
    activation,
    backprop_gradients,
    forward_trace,
    grad_check,
    init_network,
    mse,
    synth_regression,
    train,
)
from conftest import make_net


def small_tanh_net(rng, dims=(3, 4, 1)):
    mats = []
    for k in range(len(dims) - 1):
        mats.append(rng.standard_normal((dims[k + 1], dims[k] + 1)) * 0.7)
    return make_net(mats, kind="tanh")


class TestMse:
    def test_perfect_predictor(self):
        net = make_net([[[1.0, 0.0]], [[1.0, 0.0]]], kind="identity")
        d = Dataset([[3.0], [4.0]], [3.0, 4.0])
        assert mse(net, d) == 0.0

    def test_constant_zero_predictor(self):
        net = make_net([[[0.0, 0.0]], [[0.0, 0.0]]], kind="identity")
        d = Dataset([[1.0], [1.0]], [1.0, -1.0])
        # hand mean of squares: (1 + 1) / 2 = 1
        assert mse(net, d) == 1.0

    def test_row_order_invariant(self, rng):
        net = small_tanh_net(rng)
        x = rng.standard_normal((20, 3))
        y = rng.standard_normal(20)
        perm = rng.permutation(20)
        assert mse(net, Dataset(x, y)) == pytest.approx(mse(net, Dataset(x[perm], y[perm])), rel=1e-12)


class TestTrain:
    def test_noiseless_linear_identity_converges(self):
        d, _ = synth_regression(200, 4, sparsity=4, noise_sd=0.0, seed=1)
        cfg = TrainConfig(epochs=150, batch_size=32, learning_rate=0.02, seed=0, optimizer="sgd")
        net, hist = train([4, 4, 1], activation("identity"), d, cfg)
        assert hist[-1]["train_mse"] < 1e-4

    def test_deterministic_for_fixed_seed(self):
        d, _ = synth_regression(60, 3, 2, 0.1, seed=2)
        cfg = TrainConfig(epochs=5, batch_size=16, learning_rate=0.01, seed=42)
        net1, _ = train([3, 5, 1], activation("relu"), d, cfg)
        net2, _ = train([3, 5, 1], activation("relu"), d, cfg)
        for a, b in zip(net1.layers, net2.layers):
            np.testing.assert_array_equal(a.values, b.values)

    def test_divergence_error_names_epoch(self):
        d, _ = synth_regression(60, 3, 2, 0.0, seed=3)
        cfg = TrainConfig(epochs=10, batch_size=16, learning_rate=1e3, seed=0)
        with pytest.raises(TrainingDivergedError, match="epoch"):
            train([3, 8, 1], activation("relu"), d, cfg)

    def test_full_batch_loss_monotone_on_noiseless_fixture(self):
        d, _ = synth_regression(80, 3, 3, 0.0, seed=4)
        cfg = TrainConfig(
            epochs=40, batch_size=80, learning_rate=0.002, seed=1, optimizer="sgd"
        )
        _, hist = train([3, 4, 1], activation("identity"), d, cfg)
        losses = [h["train_mse"] for h in hist]
        assert all(b <= a + 1e-6 for a, b in zip(losses, losses[1:]))

    def test_val_history_recorded(self):
        d, _ = synth_regression(50, 3, 2, 0.1, seed=5)
        v, _ = synth_regression(20, 3, 2, 0.1, seed=6)
        _, hist = train([3, 4, 1], activation("tanh"), d, TrainConfig(epochs=3, batch_size=10, learning_rate=0.01), val_data=v)
        assert all(math.isfinite(h["val_mse"]) for h in hist)

    def test_architecture_mismatch(self):
        d, _ = synth_regression(10, 3, 1, 0.0, seed=0)
        with pytest.raises(ValueError, match="inputs"):
            train([5, 4, 1], activation("relu"), d, TrainConfig(epochs=1))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=-1)
        with pytest.raises(ValueError):
            TrainConfig(optimizer="adam")


class TestGradCheck:
    def test_tanh_net_matches_finite_differences(self, rng):
        net = small_tanh_net(rng)
        d = Dataset(rng.standard_normal((24, 3)), rng.standard_normal(24))
        assert grad_check(net, d, epsilon=1e-5) < 1e-5

    def test_linear_net_matches_closed_form(self, rng):
        # one identity layer: MSE gradient is 2 X+^T (X+ w - y) / N with the
        # constant column appended
        w = rng.standard_normal((1, 4))
        net = make_net([w], kind="identity")
        x = rng.standard_normal((30, 3))
        y = rng.standard_normal(30)
        xp = np.hstack([x, np.ones((30, 1))])
        closed = (2.0 / 30) * (xp.T @ (xp @ w[0] - y))
        bp = backprop_gradients(net, x, y)
        np.testing.assert_allclose(bp[0][0], closed, atol=1e-10)

    def test_zero_net_zero_targets_gradient_exactly_zero(self):
        net = make_net([np.zeros((3, 4)), np.zeros((1, 4))], kind="relu")
        x = np.random.default_rng(0).standard_normal((10, 3))
        grads = backprop_gradients(net, x, np.zeros(10))
        for g in grads:
            assert np.all(g == 0.0)

    def test_relu_away_from_kinks(self, rng):
        checked = 0
        for trial in range(5):
            net = make_net(
                [rng.standard_normal((4, 4)), rng.standard_normal((1, 5))], kind="relu"
            )
            x = rng.standard_normal((40, 3))
            trace = forward_trace(net, x)
            ok = np.abs(trace.preacts[1]).min(axis=1) > 1e-3
            if ok.sum() < 5:
                continue
            d = Dataset(x[ok], rng.standard_normal(int(ok.sum())))
            assert grad_check(net, d, epsilon=1e-5) < 1e-5
            checked += 1
        assert checked >= 1

    def test_descent_direction(self, rng):
        net = small_tanh_net(rng)
        x = rng.standard_normal((32, 3))
        y = rng.standard_normal(32)
        d = Dataset(x, y)
        before = mse(net, d)
        grads = backprop_gradients(net, x, y)
        h = 1e-6
        for k, layer in enumerate(net.layers):
            layer.values -= h * grads[k]
        assert mse(net, d) < before


class TestInit:
    def test_he_uniform_bounds_and_zero_bias(self):
        net = init_network([10, 20, 1], activation("relu"), seed=0)
        w0 = net.layers[0].values
        limit = math.sqrt(6.0 / 11)
        assert np.abs(w0[:, :-1]).max() <= limit
        assert np.all(w0[:, -1] == 0.0)

    def test_seed_controls_init(self):
        a = init_network([3, 4, 1], activation("relu"), seed=5)
        b = init_network([3, 4, 1], activation("relu"), seed=5)
        c = init_network([3, 4, 1], activation("relu"), seed=6)
        np.testing.assert_array_equal(a.layers[0].values, b.layers[0].values)
        assert np.any(a.layers[0].values != c.layers[0].values)
