"""Tests for the data re-uploading circuit and its gradients"""
import pytest
import sys
import os

import numpy as np

# Add src directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.quantum.reuploading import (
    CircuitError,
    CircuitParams,
    CircuitShapeError,
    CircuitSpec,
    GradientUnavailableError,
    NonFiniteInputError,
    Preparation,
    benchmark_gradients,
    circuit_forward,
    circuit_forward_batch,
    circuit_forward_reference,
    circuit_gates,
    circuit_gradient_adjoint,
    circuit_gradient_paramshift,
    circuit_vjp,
    sample_noise,
)
from src.quantum.statevector import GateKind, Observable
from src.services.verification import finite_difference_params, relative_error


class TestCircuitSpec:
    """Tests for CircuitSpec construction and serialization"""

    def test_default_observables_are_z_per_feature(self):
        spec = CircuitSpec(num_qubits=3)
        assert spec.num_outputs == 3
        assert spec.observables[1].terms == ((1.0, "IZI"),)

    def test_param_shape(self, small_spec):
        assert small_spec.param_shape == (2, 2, 2, 3)
        assert small_spec.num_params == 24

    def test_ring_pairs(self):
        assert CircuitSpec(num_qubits=1).ring_pairs() == []
        assert CircuitSpec(num_qubits=2).ring_pairs() == [(0, 1)]
        assert CircuitSpec(num_qubits=3).ring_pairs() == [(0, 1), (1, 2), (2, 0)]

    def test_invalid_sizes(self):
        with pytest.raises(CircuitError):
            CircuitSpec(num_qubits=0)
        with pytest.raises(CircuitError):
            CircuitSpec(num_qubits=2, reuploads=0)
        with pytest.raises(CircuitError):
            CircuitSpec(num_qubits=2, noise_bound=-0.1)

    def test_encoding_weights_length(self):
        with pytest.raises(CircuitError):
            CircuitSpec(num_qubits=1, qubits_per_feature=2, encoding_weights=(1.0,))

    def test_observable_width_must_match(self):
        with pytest.raises(CircuitError):
            CircuitSpec(num_qubits=2, observables=(Observable.pauli_z(0, 3),))

    def test_to_dict_from_dict(self):
        spec = CircuitSpec(num_qubits=2, reuploads=2, blocks=1, entangler="CZ_ring",
                           qubits_per_feature=2, encoding_weights=(1.0, 3.0),
                           observables=(Observable(((0.5, "ZIXI"),)),),
                           preparation=Preparation.HADAMARD)
        assert CircuitSpec.from_dict(spec.to_dict()) == spec


class TestCircuitForward:
    """Tests for the batched forward pass"""

    def test_minus_cos_example(self, minus_cos_spec, minus_cos_params):
        for h in np.linspace(-np.pi, np.pi, 9):
            out = circuit_forward(minus_cos_spec, minus_cos_params, [h])
            assert out[0] == pytest.approx(-np.cos(h), abs=1e-12)

    def test_matches_gate_by_gate_reference(self, rng):
        for entangler in ("CNOT_ring", "CZ_ring"):
            for prep in Preparation:
                spec = CircuitSpec(num_qubits=3, reuploads=2, blocks=2, entangler=entangler,
                                   preparation=prep)
                params = CircuitParams.initialize(spec, rng)
                h = rng.uniform(-np.pi, np.pi, size=3)
                np.testing.assert_allclose(
                    circuit_forward(spec, params, h), circuit_forward_reference(spec, params, h), atol=1e-12
                )

    def test_grouped_wires_match_reference(self, rng):
        spec = CircuitSpec(num_qubits=2, reuploads=2, blocks=1, qubits_per_feature=2,
                           encoding_weights=(1.0, 3.0), preparation=Preparation.HADAMARD)
        params = CircuitParams.initialize(spec, rng)
        h = np.array([0.4, -1.2])
        np.testing.assert_allclose(
            circuit_forward(spec, params, h), circuit_forward_reference(spec, params, h), atol=1e-12
        )

    def test_non_diagonal_observable(self, rng):
        spec = CircuitSpec(num_qubits=2, reuploads=1, blocks=1,
                           observables=(Observable(((1.0, "XY"), (0.3, "ZI"))),))
        params = CircuitParams.initialize(spec, rng)
        h = [0.1, 0.9]
        np.testing.assert_allclose(
            circuit_forward(spec, params, h), circuit_forward_reference(spec, params, h), atol=1e-12
        )

    def test_zero_params_give_constant_one(self, rng):
        for entangler in ("CNOT_ring", "CZ_ring"):
            spec = CircuitSpec(num_qubits=3, reuploads=2, blocks=2, entangler=entangler,
                               preparation=Preparation.NONE)
            params = CircuitParams.zeros(spec)
            out = circuit_forward_batch(spec, params, rng.uniform(-np.pi, np.pi, size=(8, 3)))
            np.testing.assert_allclose(out, 1.0, atol=1e-12)

    def test_periodic_in_each_input(self, rng):
        spec = CircuitSpec(num_qubits=3, reuploads=2, blocks=2, preparation=Preparation.HADAMARD)
        params = CircuitParams.initialize(spec, rng)
        h = rng.uniform(-np.pi, np.pi, size=3)
        base = circuit_forward(spec, params, h)
        for q in range(3):
            shifted = h.copy()
            shifted[q] += 2 * np.pi
            np.testing.assert_allclose(circuit_forward(spec, params, shifted), base, atol=1e-12)

    def test_outputs_bounded(self, small_spec, small_params, rng):
        out = circuit_forward_batch(small_spec, small_params, rng.uniform(-5, 5, size=(32, 2)))
        assert out.shape == (32, 2)
        assert np.all(np.abs(out) <= 1.0 + 1e-12)

    def test_gate_list_layout(self, small_spec, small_params):
        gates = circuit_gates(small_spec, small_params, [0.1, 0.2])
        kinds = [g.kind for g in gates]
        assert kinds[:2] == [GateKind.H, GateKind.H]
        assert kinds.count(GateKind.RZ) == 4
        assert kinds.count(GateKind.ROT) == 8
        assert kinds.count(GateKind.CNOT) == 4

    def test_wrong_input_width(self, small_spec, small_params):
        with pytest.raises(CircuitShapeError):
            circuit_forward_batch(small_spec, small_params, np.zeros((4, 3)))

    def test_wrong_param_shape(self, small_spec):
        with pytest.raises(CircuitShapeError):
            circuit_forward(small_spec, CircuitParams(np.zeros((1, 1, 2, 3))), [0.0, 0.0])

    def test_nan_input(self, small_spec, small_params):
        with pytest.raises(NonFiniteInputError):
            circuit_forward(small_spec, small_params, [np.nan, 0.0])


class TestCircuitNoise:
    """Tests for measurement noise in the forward pass"""

    def test_noiseless_sampling_draws_nothing(self, small_spec, rng):
        before = rng.bit_generator.state
        assert sample_noise(small_spec, 4, rng) is None
        assert rng.bit_generator.state == before

    def test_noisy_circuit_needs_rng(self, small_spec, small_params):
        with pytest.raises(CircuitError):
            circuit_forward(small_spec.with_noise(0.1), small_params, [0.0, 0.0])

    def test_same_seed_reproducible(self, small_spec, small_params):
        noisy = small_spec.with_noise(0.15)
        x = np.linspace(-1, 1, 6).reshape(3, 2)
        a = circuit_forward_batch(noisy, small_params, x, np.random.default_rng(3))
        b = circuit_forward_batch(noisy, small_params, x, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)

    def test_noise_changes_output(self, small_spec, small_params):
        x = np.array([[0.3, -0.4]])
        clean = circuit_forward_batch(small_spec, small_params, x)
        noisy = circuit_forward_batch(small_spec.with_noise(0.15), small_params, x, np.random.default_rng(3))
        assert not np.allclose(clean, noisy)

    def test_gradient_unavailable_under_noise(self, small_spec, small_params):
        noisy = small_spec.with_noise(0.1)
        with pytest.raises(GradientUnavailableError):
            circuit_gradient_paramshift(noisy, small_params, [0.0, 0.0])
        with pytest.raises(GradientUnavailableError):
            circuit_gradient_adjoint(noisy, small_params, [0.0, 0.0])


class TestCircuitGradients:
    """Tests for parameter-shift, adjoint and finite-difference agreement"""

    def test_minus_cos_input_derivative(self, minus_cos_spec, minus_cos_params):
        h = 0.8
        shift = circuit_gradient_paramshift(minus_cos_spec, minus_cos_params, [h], wrt="inputs")
        adjoint = circuit_gradient_adjoint(minus_cos_spec, minus_cos_params, [h])
        assert shift[0, 0] == pytest.approx(np.sin(h), abs=1e-12)
        assert adjoint.inputs[0, 0] == pytest.approx(np.sin(h), abs=1e-12)

    @pytest.mark.parametrize("num_qubits,seed", [(1, 0), (2, 1), (3, 2), (4, 3), (5, 4), (6, 5)])
    def test_paramshift_matches_adjoint(self, num_qubits, seed):
        rng = np.random.default_rng(seed)
        spec = CircuitSpec(num_qubits=num_qubits, reuploads=2, blocks=2,
                           entangler=("CNOT_ring", "CZ_ring")[seed % 2],
                           preparation=list(Preparation)[seed % 3])
        params = CircuitParams.initialize(spec, rng)
        h = rng.uniform(-np.pi, np.pi, size=num_qubits)
        adjoint = circuit_gradient_adjoint(spec, params, h)
        assert np.max(np.abs(circuit_gradient_paramshift(spec, params, h) - adjoint.params)) < 1e-10
        assert np.max(np.abs(circuit_gradient_paramshift(spec, params, h, "inputs") - adjoint.inputs)) < 1e-10

    def test_zero_params_give_zero_gradient(self):
        spec = CircuitSpec(num_qubits=3, reuploads=2, blocks=2, preparation=Preparation.NONE)
        params = CircuitParams.zeros(spec)
        h = [0.4, -1.1, 2.3]
        adjoint = circuit_gradient_adjoint(spec, params, h)
        np.testing.assert_allclose(adjoint.params, 0.0, atol=1e-12)
        np.testing.assert_allclose(circuit_gradient_paramshift(spec, params, h), 0.0, atol=1e-12)

    def test_adjoint_matches_finite_difference(self, small_spec, small_params):
        h = np.array([0.2, -0.7])
        adjoint = circuit_gradient_adjoint(small_spec, small_params, h)
        assert relative_error(adjoint.params, finite_difference_params(small_spec, small_params, h)) < 1e-6

    def test_grouped_input_gradient(self, rng):
        spec = CircuitSpec(num_qubits=1, reuploads=2, blocks=1, qubits_per_feature=2,
                           encoding_weights=(1.0, 3.0), preparation=Preparation.HADAMARD)
        params = CircuitParams.initialize(spec, rng)
        h, eps = 0.35, 1e-6
        numeric = (circuit_forward(spec, params, [h + eps]) - circuit_forward(spec, params, [h - eps])) / (2 * eps)
        adjoint = circuit_gradient_adjoint(spec, params, [h])
        np.testing.assert_allclose(adjoint.inputs[:, 0], numeric, atol=1e-7)

    def test_non_diagonal_observable_gradient(self, rng):
        spec = CircuitSpec(num_qubits=2, reuploads=1, blocks=2,
                           observables=(Observable(((1.0, "XX"),)), Observable(((1.0, "YZ"),))))
        params = CircuitParams.initialize(spec, rng)
        h = [0.5, 1.5]
        adjoint = circuit_gradient_adjoint(spec, params, h)
        np.testing.assert_allclose(adjoint.params, circuit_gradient_paramshift(spec, params, h), atol=1e-10)

    def test_vjp_sums_over_batch(self, small_spec, small_params, rng):
        x = rng.uniform(-1, 1, size=(5, 2))
        g = rng.normal(size=(5, 2))
        grad_params, grad_in = circuit_vjp(small_spec, small_params, x, g)
        expected = sum(
            np.tensordot(g[b], circuit_gradient_adjoint(small_spec, small_params, x[b]).params, axes=1)
            for b in range(5)
        )
        np.testing.assert_allclose(grad_params, expected, atol=1e-12)
        assert grad_in.shape == (5, 2)

    def test_vjp_fixed_noise_realization(self, small_spec, small_params, rng):
        noisy = small_spec.with_noise(0.15)
        x = rng.uniform(-1, 1, size=(3, 2))
        noise = sample_noise(noisy, 3, np.random.default_rng(4))
        g = np.ones((3, 2))
        grad_params, _ = circuit_vjp(noisy, small_params, x, g, noise)

        eps = 1e-6
        idx = (1, 0, 1, 2)
        plus, minus = small_params.angles.copy(), small_params.angles.copy()
        plus[idx] += eps
        minus[idx] -= eps
        f_plus = circuit_forward_batch(noisy, CircuitParams(plus), x, noise=noise).sum()
        f_minus = circuit_forward_batch(noisy, CircuitParams(minus), x, noise=noise).sum()
        assert grad_params[idx] == pytest.approx((f_plus - f_minus) / (2 * eps), abs=1e-7)

    def test_vjp_wrong_grad_shape(self, small_spec, small_params):
        with pytest.raises(CircuitShapeError):
            circuit_vjp(small_spec, small_params, np.zeros((2, 2)), np.zeros((2, 3)))

    def test_paramshift_unknown_wrt(self, small_spec, small_params):
        with pytest.raises(ValueError):
            circuit_gradient_paramshift(small_spec, small_params, [0.0, 0.0], wrt="weights")

    def test_benchmark_reports_timings(self, small_spec, small_params):
        result = benchmark_gradients(small_spec, small_params, [0.1, 0.2])
        assert set(result) == {"adjoint_seconds", "paramshift_seconds", "speedup"}
        assert result["adjoint_seconds"] >= 0
