"""Tests for layers, the layer stack and the Adam optimizer"""
import pytest
import sys
import os

import numpy as np

# Add src directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.nn.layers import (
    BatchNormLayer,
    BatchSizeError,
    LayerStack,
    LinearLayer,
    NeuralError,
    NonFiniteGradientError,
    ReLU,
    ReplicateLayer,
    RFFLayer,
    ShapeMismatchError,
    Sine,
    Tanh,
    linear_forward,
    rff_forward,
)
from src.models import ModelConfig
from src.nn.optim import Adam, AdamState, adam_step, backprop, mse_loss
from src.services.families import build_model
from src.services.verification import stack_gradient_error


def _fit_sine(steps, seed=0):
    """Full-batch Adam on y = sin(2 pi x) over 64 points; returns losses and the model."""
    rng = np.random.default_rng(seed)
    stack = LayerStack([LinearLayer.initialize(1, 16, rng), Tanh(), LinearLayer.initialize(16, 1, rng)])
    x = np.linspace(-1, 1, 64)[:, None]
    y = np.sin(2 * np.pi * x)
    optimizer = Adam(stack, lr=1e-3)
    losses = []
    for _ in range(steps + 1):
        loss, grads = backprop(stack, x, y)
        losses.append(loss)
        optimizer.step(grads)
    return losses, stack


class TestLinearLayer:
    """Tests for LinearLayer"""

    def test_forward_single_vector(self):
        layer = LinearLayer(np.array([[1.0, 2.0], [0.0, -1.0]]), np.array([0.5, 0.0]))
        np.testing.assert_allclose(linear_forward(layer, [1.0, 1.0]), [3.5, -1.0])

    def test_inconsistent_shapes(self):
        with pytest.raises(ShapeMismatchError):
            LinearLayer(np.zeros((2, 3)), np.zeros(3))

    def test_wrong_input_width(self):
        layer = LinearLayer.initialize(3, 2, np.random.default_rng(0))
        with pytest.raises(ShapeMismatchError):
            layer.forward(np.zeros((4, 2)))

    def test_initialization_bounds(self, rng):
        default = LinearLayer.initialize(16, 8, rng)
        first = LinearLayer.initialize(16, 8, rng, "siren_first")
        hidden = LinearLayer.initialize(16, 8, rng, "siren_hidden", omega0=30.0)
        assert np.max(np.abs(default.weight)) <= 1 / 4
        assert np.max(np.abs(first.weight)) <= 1 / 16
        assert np.max(np.abs(hidden.weight)) <= np.sqrt(6 / 16) / 30

    def test_unknown_scheme(self, rng):
        with pytest.raises(NeuralError):
            LinearLayer.initialize(2, 2, rng, "xavier")

    def test_backward_accumulates(self, rng):
        layer = LinearLayer.initialize(3, 2, rng)
        x = rng.normal(size=(5, 3))
        layer.zero_grad()
        layer.forward(x)
        layer.backward(np.ones((5, 2)))
        layer.backward(np.ones((5, 2)))
        np.testing.assert_allclose(layer.gradients()["bias"], [10.0, 10.0])


class TestBatchNorm:
    """Tests for BatchNormLayer"""

    def test_train_mode_normalizes(self, rng):
        layer = BatchNormLayer(3)
        out = layer.forward(rng.normal(5.0, 2.0, size=(64, 3)))
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.std(axis=0), 1.0, atol=1e-4)

    def test_running_statistics_use_unbiased_variance(self):
        layer = BatchNormLayer(1, momentum=0.1)
        x = np.array([[1.0], [3.0]])
        layer.forward(x)
        assert layer.running_mean[0] == pytest.approx(0.2)
        assert layer.running_var[0] == pytest.approx(0.9 + 0.1 * 2.0)

    def test_batch_of_one_in_train_mode(self):
        with pytest.raises(BatchSizeError):
            BatchNormLayer(2).forward(np.zeros((1, 2)))

    def test_batch_of_one_in_eval_mode(self):
        layer = BatchNormLayer(2)
        layer.eval()
        np.testing.assert_allclose(layer.forward(np.ones((1, 2))), 1 / np.sqrt(1 + 1e-5))

    def test_buffers_exposed(self):
        assert set(BatchNormLayer(4).buffers()) == {"running_mean", "running_var"}

    def test_two_value_column(self):
        layer = BatchNormLayer(1, epsilon=0.0)
        np.testing.assert_allclose(layer.forward(np.array([[1.0], [3.0]])), [[-1.0], [1.0]])

    def test_eval_with_unit_statistics_is_affine(self, rng):
        layer = BatchNormLayer(2, epsilon=0.0)
        layer.gamma = np.array([2.0, -0.5])
        layer.beta = np.array([0.25, 1.0])
        layer.eval()
        x = rng.normal(size=(5, 2))
        np.testing.assert_allclose(layer.forward(x), layer.gamma * x + layer.beta, atol=1e-14)

    def test_output_moments_follow_gamma_and_beta(self, rng):
        layer = BatchNormLayer(3)
        layer.gamma = np.array([2.0, 0.5, 1.5])
        layer.beta = np.array([1.0, -1.0, 0.0])
        out = layer.forward(rng.normal(3.0, 4.0, size=(256, 3)))
        np.testing.assert_allclose(out.mean(axis=0), layer.beta, atol=1e-12)
        np.testing.assert_allclose(out.var(axis=0), layer.gamma ** 2, rtol=1e-5)


class TestActivationsAndFeatures:
    """Tests for activations, RFF and replication layers"""

    def test_relu_backward_masks(self):
        layer = ReLU()
        layer.forward(np.array([[-1.0, 2.0]]))
        np.testing.assert_array_equal(layer.backward(np.ones((1, 2))), [[0.0, 1.0]])

    def test_tanh_backward(self):
        layer = Tanh()
        layer.forward(np.array([[0.0]]))
        assert layer.backward(np.ones((1, 1)))[0, 0] == pytest.approx(1.0)

    def test_sine_uses_omega0(self):
        layer = Sine(omega0=2.0)
        assert layer.forward(np.array([[np.pi / 4]]))[0, 0] == pytest.approx(1.0)

    def test_rff_features(self):
        layer = RFFLayer(np.array([[0.25]]))
        np.testing.assert_allclose(rff_forward(layer, [1.0]), [np.cos(np.pi / 2), np.sin(np.pi / 2)], atol=1e-15)
        assert layer.out_features == 2

    def test_rff_mapping_is_frozen(self, rng):
        layer = RFFLayer.initialize(2, 3, rng)
        with pytest.raises(ValueError):
            layer.mapping[0, 0] = 1.0
        assert layer.num_params == 0

    def test_rff_at_origin(self, rng):
        layer = RFFLayer.initialize(1, 4, rng)
        np.testing.assert_array_equal(rff_forward(layer, [0.0]), [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0])

    def test_rff_feature_pairs_on_unit_circle(self, rng):
        layer = RFFLayer.initialize(2, 5, rng)
        out = layer.forward(rng.uniform(-1, 1, size=(50, 2)))
        np.testing.assert_allclose(out[:, :5] ** 2 + out[:, 5:] ** 2, 1.0, atol=1e-12)

    def test_siren_preactivations_stay_within_pi(self):
        model = build_model(ModelConfig.for_family("siren", 1, seed=0))
        out = np.linspace(-1, 1, 1000)[:, None]
        inside, total = 0, 0
        for layer in model.layers:
            if isinstance(layer, Sine):
                inside += int(np.sum(np.abs(out) <= np.pi))
                total += out.size
            out = layer.forward(out)
        assert total == 1000 * 10 * 7
        assert inside >= 0.99 * total

    def test_replicate_backward_sums_copies(self):
        layer = ReplicateLayer(2, 5)
        out = layer.forward(np.array([[1.0, 2.0]]))
        np.testing.assert_array_equal(out, [[1.0, 2.0, 1.0, 2.0, 1.0]])
        np.testing.assert_array_equal(layer.backward(np.ones((1, 5))), [[3.0, 2.0]])


class TestLayerStack:
    """Tests for LayerStack"""

    def test_shape_error_reports_layer_index(self, rng):
        stack = LayerStack([LinearLayer.initialize(1, 3, rng), ReLU(), LinearLayer.initialize(2, 1, rng)])
        with pytest.raises(ShapeMismatchError) as excinfo:
            stack.forward(np.zeros((4, 1)))
        assert excinfo.value.layer_index == 2

    def test_named_parameters_and_groups(self, toy_configs):
        model = build_model(toy_configs["qiren"])
        groups = model.param_groups()
        assert set(groups) == set(model.named_parameters())
        assert "quantum" in groups.values() and "classical" in groups.values()

    @pytest.mark.parametrize("family", ["qiren", "relu", "tanh", "relu_rff", "siren", "pure_quantum"])
    def test_backprop_matches_finite_differences(self, toy_configs, family, rng):
        model = build_model(toy_configs[family])
        x = np.linspace(-1, 1, 8)[:, None]
        y = rng.uniform(-1, 1, size=(8, 1))
        assert stack_gradient_error(model, x, y) < 1e-5

    def test_backprop_returns_every_parameter(self, toy_configs):
        model = build_model(toy_configs["relu"])
        loss, grads = backprop(model, np.linspace(-1, 1, 6)[:, None], np.zeros((6, 1)))
        assert loss >= 0
        assert set(grads) == set(model.named_parameters())


class TestLoss:
    """Tests for mse_loss"""

    def test_mean_of_squares(self):
        loss, grad = mse_loss(np.array([[1.0], [3.0]]), np.array([[0.0], [0.0]]))
        assert loss == pytest.approx(5.0)
        np.testing.assert_allclose(grad, [[1.0], [3.0]])

    def test_two_point_example(self):
        loss, _ = mse_loss(np.array([1.0, 1.0]), np.array([0.0, 2.0]))
        assert loss == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            mse_loss(np.zeros((2, 1)), np.zeros((2, 2)))

    def test_empty(self):
        with pytest.raises(ShapeMismatchError):
            mse_loss(np.zeros((0, 1)), np.zeros((0, 1)))


class TestAdam:
    """Tests for the Adam optimizer"""

    def test_first_step_moves_by_learning_rate(self):
        state = AdamState(lr=0.01)
        params = {"w": np.array([1.0, -1.0])}
        adam_step(state, params, {"w": np.array([0.5, -2.0])})
        np.testing.assert_allclose(params["w"], [0.99, -0.99], atol=1e-8)
        assert state.step == 1

    def test_non_finite_gradient_names_parameter(self):
        state = AdamState(lr=0.01)
        with pytest.raises(NonFiniteGradientError) as excinfo:
            adam_step(state, {"w": np.zeros(2)}, {"w": np.array([np.inf, 0.0])})
        assert excinfo.value.parameter == "w"
        assert state.step == 0

    def test_gradient_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            adam_step(AdamState(lr=0.1), {"w": np.zeros(2)}, {"w": np.zeros(3)})

    def test_group_learning_rates(self, toy_configs):
        model = build_model(toy_configs["qiren"])
        optimizer = Adam(model)
        assert optimizer.states["classical"].lr == pytest.approx(5e-4)
        assert optimizer.states["quantum"].lr == pytest.approx(5e-3)
        single = Adam(model, lr=1e-2)
        assert single.states["classical"].lr == single.states["quantum"].lr == 1e-2

    def test_step_updates_in_place(self, toy_configs):
        model = build_model(toy_configs["qiren"])
        before = {k: v.copy() for k, v in model.named_parameters().items()}
        _, grads = backprop(model, np.linspace(-1, 1, 6)[:, None], np.ones((6, 1)))
        Adam(model).step(grads)
        after = model.named_parameters()
        assert any(not np.array_equal(before[k], after[k]) for k in before)

    def test_zero_gradients_leave_params_unchanged(self):
        state = AdamState(lr=0.1)
        params = {"w": np.array([0.3, -1.2]), "b": np.array([2.0])}
        before = {k: v.copy() for k, v in params.items()}
        for _ in range(10):
            adam_step(state, params, {k: np.zeros_like(v) for k, v in params.items()})
        for k in params:
            np.testing.assert_array_equal(params[k], before[k])

    def test_identical_runs_are_bit_identical(self):
        losses_a, model_a = _fit_sine(20, seed=2)
        losses_b, model_b = _fit_sine(20, seed=2)
        assert losses_a == losses_b
        for name, p in model_a.named_parameters().items():
            np.testing.assert_array_equal(p, model_b.named_parameters()[name])

    def test_sine_fit_loss_decreases(self):
        losses, _ = _fit_sine(50)
        decreases = sum(after < before for before, after in zip(losses, losses[1:]))
        assert decreases >= 45
