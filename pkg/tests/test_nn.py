import math

import numpy as np
import pytest

from nlsf.errors import DimensionMismatch
from nlsf.nn import (
    AdamState,
    MlpParams,
    adam_step,
    cross_entropy,
    finite_diff_grads,
    init_mlp,
    log_softmax,
    max_relative_error,
    mlp_backward,
    mlp_forward,
    softmax,
)


class TestForward:
    def test_identity_single_layer(self):
        p = MlpParams((3, 3), (), [np.eye(3), np.zeros(3)])
        x = np.arange(6.0).reshape(2, 3)
        out, _ = mlp_forward(p, x)
        np.testing.assert_allclose(out, x)

    def test_relu_kills_negative_preactivations(self):
        p = MlpParams((2, 2, 1), ("relu",),
                      [-np.eye(2), np.zeros(2), np.ones((2, 1)), np.zeros(1)])
        out, _ = mlp_forward(p, np.array([[1.0, 2.0]]))
        np.testing.assert_allclose(out, 0.0)

    def test_hand_computed_2_2_1(self):
        # W1 = [[1, 2], [3, 4]], b1 = (0.5, -0.5), relu, W2 = [[1], [-1]], b2 = 0.25
        # x = (1, 1): z1 = (4.5, 5.5) -> a1 same; out = 4.5 - 5.5 + 0.25 = -0.75
        p = MlpParams((2, 2, 1), ("relu",),
                      [np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([0.5, -0.5]),
                       np.array([[1.0], [-1.0]]), np.array([0.25])])
        out, _ = mlp_forward(p, np.array([[1.0, 1.0]]))
        assert out[0, 0] == pytest.approx(-0.75)

    def test_width_mismatch(self):
        p = init_mlp((3, 2), seed=0)
        with pytest.raises(DimensionMismatch):
            mlp_forward(p, np.ones((1, 4)))


class TestBackward:
    def test_zero_grad_out(self):
        p = init_mlp((3, 4, 2), seed=1)
        out, tape = mlp_forward(p, np.ones((5, 3)))
        grads, gin = mlp_backward(p, tape, np.zeros_like(out))
        assert all(np.all(g == 0.0) for g in grads)
        np.testing.assert_allclose(gin, 0.0)

    def test_linear_gradient_is_input(self):
        p = MlpParams((3, 1), (), [np.zeros((3, 1)), np.zeros(1)])
        x = np.array([[1.0, 2.0, 3.0]])
        out, tape = mlp_forward(p, x)
        grads, _ = mlp_backward(p, tape, np.ones((1, 1)))
        np.testing.assert_allclose(grads[0].ravel(), x.ravel())

    @pytest.mark.parametrize("activation", ["relu", "tanh", "identity"])
    def test_finite_difference(self, activation):
        rng = np.random.default_rng(7)
        p = init_mlp((4, 6, 5, 3), activation=activation, seed=3, zero_bias=False)
        x = rng.standard_normal((8, 4))
        target = rng.standard_normal((8, 3))

        def loss():
            out, _ = mlp_forward(p, x)
            return 0.5 * float(np.sum((out - target) ** 2))

        out, tape = mlp_forward(p, x)
        grads, _ = mlp_backward(p, tape, out - target)
        numeric = finite_diff_grads(loss, p.params, h=1e-5)
        assert max_relative_error(grads, numeric) <= 1e-4


class TestSoftmaxLoss:
    def test_uniform_logits(self):
        for c in (2, 5, 11):
            loss, _ = cross_entropy(np.zeros((3, c)), np.zeros(3, dtype=int))
            assert loss == pytest.approx(math.log(c), rel=1e-12)

    def test_concentrated_logits(self):
        logits = np.array([[100.0, 0.0, 0.0]])
        loss, _ = cross_entropy(logits, np.array([0]))
        assert loss == pytest.approx(0.0, abs=1e-12)

    def test_gradient_rows_sum_to_zero(self):
        rng = np.random.default_rng(2)
        logits = rng.standard_normal((6, 4))
        _, grad = cross_entropy(logits, rng.integers(0, 4, size=6))
        np.testing.assert_allclose(grad.sum(axis=1), 0.0, atol=1e-12)

    def test_log_softmax_is_stable(self):
        out = log_softmax(np.array([[1e4, 0.0]]))
        assert np.isfinite(out).all()

    def test_softmax_rows_normalize(self):
        s = softmax(np.array([[1.0, 2.0, 3.0]]))
        assert s.sum() == pytest.approx(1.0)

    def test_finite_difference(self):
        rng = np.random.default_rng(4)
        logits = rng.standard_normal((5, 3))
        targets = rng.integers(0, 3, size=5)
        _, grad = cross_entropy(logits, targets)

        def loss():
            return cross_entropy(logits, targets)[0]

        numeric = finite_diff_grads(loss, [logits], h=1e-6)
        assert max_relative_error([grad], numeric) <= 1e-4


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        p = [np.ones((2, 2)), np.ones(2)]
        state = AdamState.for_params(p, lr=0.1)
        adam_step(state, p, [np.zeros((2, 2)), np.zeros(2)])
        np.testing.assert_allclose(p[0], 1.0)
        np.testing.assert_allclose(p[1], 1.0)

    def test_single_scalar_step(self):
        # hand oracle: mhat = 1, vhat = 1, delta = lr / (1 + eps) ~= lr
        p = [np.array([1.0])]
        state = AdamState.for_params(p, lr=0.1)
        adam_step(state, p, [np.array([1.0])])
        assert p[0][0] == pytest.approx(1.0 - 0.1, abs=1e-8)

    def test_deterministic(self):
        def run():
            rng = np.random.default_rng(0)
            p = init_mlp((3, 4, 2), seed=5)
            state = AdamState.for_params(p.params, lr=1e-2)
            x = rng.standard_normal((6, 3))
            t = rng.integers(0, 2, size=6)
            for _ in range(20):
                out, tape = mlp_forward(p, x)
                _, grad = cross_entropy(out, t)
                grads, _ = mlp_backward(p, tape, grad)
                adam_step(state, p.params, grads)
            return p.params

        a = run()
        b = run()
        for pa, pb in zip(a, b):
            assert np.array_equal(pa, pb)

    def test_weight_decay_only_on_matrices(self):
        w = np.full((2, 2), 2.0)
        b = np.full(2, 2.0)
        state = AdamState.for_params([w, b], lr=0.5)
        adam_step(state, [w, b], [np.zeros((2, 2)), np.zeros(2)], weight_decay=0.1)
        np.testing.assert_allclose(w, 2.0 - 0.5 * 0.1 * 2.0)
        np.testing.assert_allclose(b, 2.0)

    def test_loss_decreases_on_regression_task(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((32, 5))
        y = rng.standard_normal((32, 2))
        p = init_mlp((5, 16, 2), seed=1)
        state = AdamState.for_params(p.params, lr=1e-2)

        def loss_and_grads():
            out, tape = mlp_forward(p, x)
            diff = out - y
            grads, _ = mlp_backward(p, tape, diff / x.shape[0])
            return float(np.mean(diff ** 2)), grads

        initial, _ = loss_and_grads()
        for _ in range(50):
            _, grads = loss_and_grads()
            adam_step(state, p.params, grads)
        final, _ = loss_and_grads()
        assert final < 0.5 * initial


def test_init_is_seeded_and_bounded():
    p1 = init_mlp((10, 7), seed=42)
    p2 = init_mlp((10, 7), seed=42)
    assert np.array_equal(p1.params[0], p2.params[0])
    s = math.sqrt(6.0 / 17.0)
    assert np.abs(p1.params[0]).max() <= s
