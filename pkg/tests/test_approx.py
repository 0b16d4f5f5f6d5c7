import numpy as np
import pytest

from susp.errors import DimensionMismatch, NonFiniteGradient
from susp.learning.approx import (
    MlpParams,
    backward,
    forward,
    forward_with_cache,
    gradient,
    init_mlp,
    init_optimizer,
    optimizer_step,
    polyak_update,
)


def _numeric(value, arrays, step=1e-5):
    grads = []
    for array in arrays:
        grad = np.zeros_like(array)
        for idx in np.ndindex(array.shape):
            original = array[idx]
            array[idx] = original + step
            plus = value()
            array[idx] = original - step
            minus = value()
            array[idx] = original
            grad[idx] = (plus - minus) / (2 * step)
        grads.append(grad)
    return grads


class TestForward:
    def test_identity_layer(self):
        params = MlpParams((np.eye(3),), (np.zeros(3),))
        x = np.array([0.5, 0.0, 2.0])
        assert np.array_equal(forward(params, x), x)

    def test_constant_map(self, rng):
        params = init_mlp([3, 5, 2], rng)
        bias = np.array([0.7, -1.2])
        constant = MlpParams(
            (np.zeros((3, 5)), np.zeros((5, 2))), (np.zeros(5), bias)
        )
        for _ in range(5):
            assert np.array_equal(forward(constant, rng.standard_normal(3)), bias)
        assert params.sizes == [3, 5, 2]

    def test_matches_dense_oracle(self, rng):
        params = init_mlp([4, 16, 16, 1], rng)
        x = rng.standard_normal(4)
        h = x
        for i, (w, b) in enumerate(zip(params.weights, params.biases)):
            z = np.array([sum(h[k] * w[k, j] for k in range(len(h))) + b[j] for j in range(len(b))])
            h = z if i == 2 else np.where(z > 0, z, 0.0)
        assert forward(params, x) == pytest.approx(h, abs=1e-12)

    def test_batch_and_single_agree(self, rng):
        params = init_mlp([4, 8, 3], rng)
        batch = rng.standard_normal((6, 4))
        out = forward(params, batch)
        assert out.shape == (6, 3)
        assert np.allclose(out[2], forward(params, batch[2]))

    def test_wrong_input_size(self, rng):
        params = init_mlp([4, 8, 3], rng)
        with pytest.raises(DimensionMismatch):
            forward(params, np.zeros(5))

    def test_init_rejects_degenerate_sizes(self, rng):
        with pytest.raises(ValueError):
            init_mlp([4], rng)

    def test_output_scale(self, rng):
        params = init_mlp([4, 8, 2], rng, output_scale=1e-2)
        assert np.max(np.abs(params.weights[-1])) <= 1e-2 / np.sqrt(8)


class TestGradient:
    def test_constant_loss(self, rng):
        params = init_mlp([3, 4, 2], rng)
        _, grads = gradient(params, rng.standard_normal(3), lambda out: (1.0, np.zeros_like(out)))
        assert all(np.all(g == 0.0) for g in grads.arrays())

    def test_least_squares(self, rng):
        w = rng.standard_normal((3, 1))
        b = rng.standard_normal(1)
        params = MlpParams((w,), (b,))
        x = rng.standard_normal((10, 3))
        y = rng.standard_normal(10)

        def loss(out):
            r = out[:, 0] - y
            return float(np.mean(r * r)), (2.0 * r / len(y))[:, None]

        _, grads = gradient(params, x, loss)
        residual = x @ w[:, 0] + b[0] - y
        assert grads.weights[0][:, 0] == pytest.approx(2.0 * x.T @ residual / 10, abs=1e-12)
        assert grads.biases[0][0] == pytest.approx(2.0 * residual.mean(), abs=1e-12)

    def test_matches_finite_differences(self, rng):
        params = init_mlp([3, 7, 5, 2], rng)
        x = rng.standard_normal((4, 3))
        _, cache = forward_with_cache(params, x)
        # keep the fixture away from ReLU kinks
        while any(np.min(np.abs(z)) < 1e-3 for z in cache.pre_activations[:-1]):
            x = rng.standard_normal((4, 3))
            _, cache = forward_with_cache(params, x)
        direction = rng.standard_normal((4, 2))
        _, grads = gradient(params, x, lambda out: (float(np.sum(direction * out)), direction))
        numeric = _numeric(lambda: float(np.sum(direction * forward(params, x))), params.arrays())
        for a, n in zip(grads.arrays(), numeric):
            scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-4)
            assert np.max(np.abs(a - n) / scale) < 1e-4

    def test_input_gradient(self, rng):
        params = init_mlp([3, 6, 1], rng)
        x = rng.standard_normal(3)
        out, cache = forward_with_cache(params, x)
        _, grad_input = backward(params, cache, np.ones(1))
        step = 1e-6
        for i in range(3):
            e = np.zeros(3)
            e[i] = step
            numeric = (forward(params, x + e)[0] - forward(params, x - e)[0]) / (2 * step)
            assert grad_input[i] == pytest.approx(numeric, abs=1e-6)


class TestOptimizer:
    def test_zero_gradient(self, rng):
        params = init_mlp([2, 3, 1], rng)
        state = init_optimizer(params, 1e-2)
        zeros = MlpParams.from_arrays([np.zeros_like(a) for a in params.arrays()])
        new, state = optimizer_step(params, zeros, state)
        assert state.step == 1
        for a, b in zip(new.arrays(), params.arrays()):
            assert np.array_equal(a, b)

    def test_constant_gradient_moves_by_lr(self):
        params = [np.array([0.0, 0.0])]
        grads = [np.array([3.0, -0.5])]
        state = init_optimizer(params, 1e-3)
        previous = params
        for _ in range(50):
            params, state = optimizer_step(params, grads, state)
            step = params[0] - previous[0]
            assert step[0] < 0.0 < step[1]
            assert np.abs(step) == pytest.approx([1e-3, 1e-3], rel=1e-3)
            previous = params

    @staticmethod
    def _descend(lr, beta1):
        target = np.array([1.0, -2.0, 0.5])
        params = [np.zeros(3)]
        state = init_optimizer(params, lr, beta1=beta1)
        history = [float(np.sum(target**2))]
        for _ in range(200):
            grads = [2.0 * (params[0] - target)]
            params, state = optimizer_step(params, grads, state)
            history.append(float(np.sum((params[0] - target) ** 2)))
        return history

    def test_convex_quadratic(self):
        history = self._descend(0.1, 0.9)
        assert history[-1] < 1e-3 * history[0]

    def test_convex_quadratic_without_momentum_is_monotone(self):
        history = self._descend(0.05, 0.0)
        assert history[-1] < 1e-3 * history[0]
        assert all(b <= a + 1e-12 for a, b in zip(history[10:], history[11:]))

    def test_non_finite_gradient(self):
        state = init_optimizer([np.zeros(2)], 1e-3)
        with pytest.raises(NonFiniteGradient):
            optimizer_step([np.zeros(2)], [np.array([np.nan, 0.0])], state)

    def test_shape_mismatch(self):
        state = init_optimizer([np.zeros(2)], 1e-3)
        with pytest.raises(DimensionMismatch):
            optimizer_step([np.zeros(2)], [np.zeros(3)], state)


class TestPolyak:
    def test_tau_one_copies_online(self, rng):
        target = init_mlp([2, 3, 1], rng)
        online = init_mlp([2, 3, 1], rng)
        out = polyak_update(target, online, 1.0)
        assert all(np.array_equal(a, b) for a, b in zip(out.arrays(), online.arrays()))

    def test_tau_zero_keeps_target(self, rng):
        target = init_mlp([2, 3, 1], rng)
        online = init_mlp([2, 3, 1], rng)
        out = polyak_update(target, online, 0.0)
        assert all(np.array_equal(a, b) for a, b in zip(out.arrays(), target.arrays()))

    def test_scalar_mix(self):
        target = MlpParams((np.zeros((1, 1)),), (np.zeros(1),))
        online = MlpParams((np.ones((1, 1)),), (np.ones(1),))
        out = polyak_update(target, online, 0.005)
        assert out.weights[0][0, 0] == pytest.approx(0.005)

    def test_target_is_exponential_average_of_history(self):
        tau = 0.05
        history = np.sin(np.arange(60) * 0.3) + 0.02 * np.arange(60)
        target = MlpParams((np.full((1, 1), 2.0),), (np.zeros(1),))
        for theta in history:
            online = MlpParams((np.full((1, 1), theta),), (np.zeros(1),))
            target = polyak_update(target, online, tau)
        n = len(history)
        ages = n - 1 - np.arange(n)
        expected = (1 - tau) ** n * 2.0 + np.sum(tau * (1 - tau) ** ages * history)
        assert target.weights[0][0, 0] == pytest.approx(expected, rel=1e-10)

    def test_tau_out_of_range(self, rng):
        params = init_mlp([2, 3, 1], rng)
        with pytest.raises(ValueError):
            polyak_update(params, params, 1.5)
