import math

import numpy as np
import pytest

from navlab.network import (
    AdamState,
    Conv1dSpec,
    LinearSpec,
    NetworkInstance,
    ReluSpec,
    adam_step,
    backward,
    forward,
    init_network,
    parse_modules,
    validate_architecture,
)
from navlab.robots import get_robot

TB3 = get_robot("turtlebot3")  # obs_dim 362, action_dim 2


def mlp(obs_dim=362, hidden=64, action_dim=2):
    return [
        {"type": "linear", "in_features": obs_dim, "out_features": hidden, "bias": True},
        {"type": "relu"},
        {"type": "linear", "in_features": hidden, "out_features": action_dim, "bias": True},
    ]


class TestValidateArchitecture:
    def test_simple_mlp_ok(self):
        assert validate_architecture(mlp(), TB3) == []

    def test_wrong_input_size_flagged_at_module_zero(self):
        spec = mlp(obs_dim=TB3.obs_dim + 1)
        violations = validate_architecture(spec, TB3)
        assert violations and violations[0].field == "modules[0]"

    def test_conv_shape_chain(self):
        # conv1d(1->4, k=5, s=2) on 362 -> length (362-5)//2+1 = 179, flatten 716
        spec = [
            {"type": "conv1d", "in_channels": 1, "out_channels": 4, "kernel_size": 5, "stride": 2},
            {"type": "relu"},
            {"type": "linear", "in_features": 716, "out_features": 2},
        ]
        assert (362 - 5) // 2 + 1 == 179 and 4 * 179 == 716
        assert validate_architecture(spec, TB3) == []
        spec[2]["in_features"] = 715
        violations = validate_architecture(spec, TB3)
        assert violations[0].field == "modules[2]"
        assert "716" in violations[0].reason

    def test_wrong_output_flagged_at_last_module(self):
        spec = mlp(action_dim=3)
        violations = validate_architecture(spec, TB3)
        assert violations[0].field == "modules[2]"

    def test_unknown_type(self):
        violations = validate_architecture([{"type": "gru"}], TB3)
        assert violations and "unknown module type" in violations[0].reason

    def test_empty_list(self):
        assert validate_architecture([], TB3)


class TestForward:
    def test_identity_linear(self):
        modules, _ = parse_modules([{"type": "linear", "in_features": 3, "out_features": 3}])
        params = np.concatenate([np.eye(3).reshape(-1), np.zeros(3)])
        net = NetworkInstance(modules, params)
        x = np.array([1.5, -2.0, 0.25])
        np.testing.assert_array_equal(forward(net, x), x)

    def test_relu(self):
        modules, _ = parse_modules(
            [{"type": "linear", "in_features": 3, "out_features": 3}, {"type": "relu"}]
        )
        params = np.concatenate([np.eye(3).reshape(-1), np.zeros(3)])
        net = NetworkInstance(modules, params)
        np.testing.assert_array_equal(forward(net, np.array([-1.0, 2.0, 0.0])), [0.0, 2.0, 0.0])

    def test_rejects_non_finite(self):
        net = init_network(mlp(4, 8, 2), seed=0)
        with pytest.raises(ValueError, match="non-finite"):
            forward(net, np.array([1.0, np.nan, 0.0, 0.0]))

    def test_rejects_wrong_size(self):
        net = init_network(mlp(4, 8, 2), seed=0)
        with pytest.raises(ValueError):
            forward(net, np.zeros(5))

    def test_matches_dense_matrix_reimplementation(self):
        # independent oracle: every module expanded to an explicit dense matrix
        rng = np.random.default_rng(8)
        obs = 30
        spec = [
            {"type": "conv1d", "in_channels": 1, "out_channels": 3, "kernel_size": 4, "stride": 2},
            {"type": "relu"},
            {"type": "linear", "in_features": 3 * 14, "out_features": 5},
        ]
        net = init_network(spec, seed=123)
        x = rng.normal(size=obs)

        conv = net.view(0)
        out_len = (obs - 4) // 2 + 1
        dense = np.zeros((3 * out_len, obs))
        cb = np.zeros(3 * out_len)
        for oc in range(3):
            for j in range(out_len):
                row = oc * out_len + j
                cb[row] = conv["b"][oc]
                for k in range(4):
                    dense[row, j * 2 + k] += conv["W"][oc, 0, k]
        h = dense @ x + cb
        h = np.maximum(h, 0.0)
        lin = net.view(2)
        expected = lin["W"] @ h + lin["b"]

        np.testing.assert_allclose(forward(net, x), expected, atol=1e-12)


def finite_difference_grads(net, x, upstream, h=1e-5):
    base_params = net.params.copy()
    fd = np.zeros_like(base_params)
    for i in range(base_params.size):
        net.params[i] = base_params[i] + h
        f_plus = float(upstream @ forward(net, x))
        net.params[i] = base_params[i] - h
        f_minus = float(upstream @ forward(net, x))
        net.params[i] = base_params[i]
        fd[i] = (f_plus - f_minus) / (2 * h)
    return fd


class TestBackward:
    def test_linear_grad_is_outer_product(self):
        modules, _ = parse_modules([{"type": "linear", "in_features": 3, "out_features": 2}])
        rng = np.random.default_rng(0)
        net = NetworkInstance(modules, rng.normal(size=8))
        x = rng.normal(size=3)
        u = rng.normal(size=2)
        forward(net, x)
        grads, dx = backward(net, u)
        np.testing.assert_allclose(grads[:6].reshape(2, 3), np.outer(u, x))
        np.testing.assert_allclose(grads[6:], u)
        np.testing.assert_allclose(dx, net.view(0)["W"].T @ u)

    def test_relu_blocks_negative_preactivation(self):
        modules, _ = parse_modules(
            [{"type": "linear", "in_features": 2, "out_features": 2}, {"type": "relu"}]
        )
        params = np.concatenate([np.eye(2).reshape(-1), np.zeros(2)])
        net = NetworkInstance(modules, params)
        forward(net, np.array([-1.0, 3.0]))
        grads, dx = backward(net, np.ones(2))
        np.testing.assert_array_equal(dx, [0.0, 1.0])

    def test_backward_before_forward_raises(self):
        net = init_network(mlp(4, 8, 2), seed=0)
        with pytest.raises(RuntimeError, match="before forward"):
            backward(net, np.zeros(2))

    def test_finite_differences_mixed_architectures(self):
        rng = np.random.default_rng(42)
        for trial in range(10):
            obs = int(rng.integers(8, 24))
            spec = [
                {
                    "type": "conv1d",
                    "in_channels": 1,
                    "out_channels": int(rng.integers(1, 4)),
                    "kernel_size": int(rng.integers(2, 5)),
                    "stride": int(rng.integers(1, 3)),
                },
                {"type": "relu"},
            ]
            c = spec[0]
            out_len = (obs - c["kernel_size"]) // c["stride"] + 1
            spec.append(
                {"type": "linear", "in_features": c["out_channels"] * out_len, "out_features": 3}
            )
            net = init_network(spec, seed=trial)
            x = rng.normal(size=obs)
            u = rng.normal(size=3)
            forward(net, x)
            grads, _ = backward(net, u)
            fd = finite_difference_grads(net, x, u)
            denom = np.maximum(np.abs(fd), 1e-8)
            assert np.max(np.abs(grads - fd) / denom) < 1e-4


class TestInit:
    def test_seeded_reproducible(self):
        a = init_network(mlp(10, 6, 2), seed=7)
        b = init_network(mlp(10, 6, 2), seed=7)
        np.testing.assert_array_equal(a.params, b.params)
        c = init_network(mlp(10, 6, 2), seed=8)
        assert not np.array_equal(a.params, c.params)

    def test_fan_in_bound(self):
        net = init_network(mlp(100, 50, 2), seed=1)
        w = net.view(0)["W"]
        assert np.max(np.abs(w)) <= 1 / math.sqrt(100)


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        params = np.array([1.0, -2.0, 3.0])
        before = params.copy()
        adam_step(params, np.zeros(3), AdamState.zeros(3), lr=0.1)
        np.testing.assert_array_equal(params, before)

    def test_zero_gradient_decays_moments(self):
        state = AdamState.zeros(3)
        state.m[:] = 0.5
        state.v[:] = 0.25
        adam_step(np.zeros(3), np.zeros(3), state, lr=0.1)
        np.testing.assert_allclose(state.m, 0.5 * 0.9)
        np.testing.assert_allclose(state.v, 0.25 * 0.999)

    def test_first_step_closed_form(self):
        g = np.array([0.3, -1.2])
        params = np.zeros(2)
        adam_step(params, g.copy(), AdamState.zeros(2), lr=0.01)
        # mhat = g, vhat = g^2 at t=1 -> delta = -lr * g/(|g|+eps)
        expected = -0.01 * g / (np.abs(g) + 1e-8)
        np.testing.assert_allclose(params, expected, rtol=1e-12)

    def test_hundred_step_trajectory_matches_reference(self):
        rng = np.random.default_rng(5)
        params = rng.normal(size=7)
        ref = params.copy()
        state = AdamState.zeros(7)
        m = np.zeros(7)
        v = np.zeros(7)
        lr, b1, b2, eps = 3e-3, 0.9, 0.999, 1e-8
        for t in range(1, 101):
            g = rng.normal(size=7)
            adam_step(params, g, state, lr=lr, beta1=b1, beta2=b2, eps=eps)
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            ref = ref - lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
        np.testing.assert_allclose(params, ref, atol=1e-10)
