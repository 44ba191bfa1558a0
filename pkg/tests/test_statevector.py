"""Tests for the statevector simulator"""
import pytest
import sys
import os

import numpy as np
from scipy.stats import unitary_group

# Add src directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.quantum.statevector import (
    Gate,
    GateError,
    GateKind,
    Observable,
    QubitCountError,
    RegisterTooLargeError,
    SimulationError,
    StateVector,
    apply_gate,
    apply_matrix,
    dense_oracle_apply,
    embed_operator,
    expectation,
    inject_measurement_noise,
    rot,
    run_gates,
    rx,
    ry,
    rz,
)
from src.services.verification import random_gate


class TestGateExamples:
    """Tests for single gate applications on basis states"""

    def test_hadamard_on_zero(self):
        state = apply_gate(StateVector.zero(1), Gate(GateKind.H, (0,)))
        np.testing.assert_allclose(state.amplitudes, [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-15)

    def test_cnot_flips_target_when_control_set(self):
        state = apply_gate(StateVector.basis("10"), Gate(GateKind.CNOT, (0, 1)))
        np.testing.assert_allclose(state.amplitudes, StateVector.basis("11").amplitudes)

    def test_cnot_leaves_target_when_control_clear(self):
        state = apply_gate(StateVector.basis("01"), Gate(GateKind.CNOT, (0, 1)))
        np.testing.assert_allclose(state.amplitudes, StateVector.basis("01").amplitudes)

    def test_cnot_reversed_wires(self):
        state = apply_gate(StateVector.basis("01"), Gate(GateKind.CNOT, (1, 0)))
        np.testing.assert_allclose(state.amplitudes, StateVector.basis("11").amplitudes)

    def test_cz_phase_on_eleven(self):
        state = apply_gate(StateVector.basis("11"), Gate(GateKind.CZ, (0, 1)))
        np.testing.assert_allclose(state.amplitudes, -StateVector.basis("11").amplitudes)

    def test_bell_state_zz_correlation(self):
        state = run_gates(StateVector.zero(2), [Gate(GateKind.H, (0,)), Gate(GateKind.CNOT, (0, 1))])
        assert expectation(state, Observable(((1.0, "ZZ"),))) == pytest.approx(1.0, abs=1e-12)
        assert expectation(state, Observable.pauli_z(0, 2)) == pytest.approx(0.0, abs=1e-12)

    def test_x_expectation_on_plus_state(self):
        state = apply_gate(StateVector.zero(1), Gate(GateKind.H, (0,)))
        assert expectation(state, Observable(((1.0, "X"),))) == pytest.approx(1.0, abs=1e-12)

    def test_qubit_zero_is_most_significant(self):
        state = apply_gate(StateVector.zero(3), Gate(GateKind.X, (0,)))
        assert np.argmax(state.probabilities()) == 0b100

    def test_rx_pi_is_bit_flip_up_to_phase(self):
        state = apply_gate(StateVector.zero(1), Gate(GateKind.RX, (0,), (np.pi,)))
        np.testing.assert_allclose(state.probabilities(), [0.0, 1.0], atol=1e-15)

    def test_ry_then_z_gives_cosine(self):
        for theta in np.linspace(-np.pi, np.pi, 7):
            state = apply_gate(StateVector.zero(1), Gate(GateKind.RY, (0,), (theta,)))
            assert expectation(state, Observable.pauli_z(0, 1)) == pytest.approx(np.cos(theta), abs=1e-12)


class TestGateMatrices:
    """Tests for rotation matrices and conventions"""

    def test_rotations_are_unitary(self, rng):
        for _ in range(10):
            a, b, c = rng.uniform(-np.pi, np.pi, size=3)
            for u in (rx(a), ry(a), rz(a), rot(a, b, c)):
                np.testing.assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-14)

    def test_rz_is_symmetric_phase(self):
        theta = 0.7
        np.testing.assert_allclose(np.diag(rz(theta)), [np.exp(-0.35j), np.exp(0.35j)])

    def test_rot_composition_order(self):
        phi, theta, omega = 0.3, -1.1, 2.0
        np.testing.assert_allclose(rot(phi, theta, omega), rz(phi) @ ry(theta) @ rz(omega))

    def test_gate_str(self):
        assert str(Gate(GateKind.RY, (1,), (0.5,))) == "RY(1,)(0.5000)"


class TestGateErrors:
    """Tests for gate and register validation"""

    def test_target_out_of_range(self):
        with pytest.raises(GateError):
            apply_gate(StateVector.zero(2), Gate(GateKind.X, (2,)))

    def test_negative_target(self):
        with pytest.raises(GateError):
            apply_gate(StateVector.zero(2), Gate(GateKind.H, (-1,)))

    def test_wrong_param_count(self):
        with pytest.raises(GateError):
            Gate(GateKind.ROT, (0,), (0.1, 0.2))

    def test_wrong_target_count(self):
        with pytest.raises(GateError):
            Gate(GateKind.CNOT, (0,))

    def test_duplicate_targets(self):
        with pytest.raises(GateError):
            Gate(GateKind.CZ, (1, 1))

    def test_non_finite_parameter(self):
        with pytest.raises(GateError):
            Gate(GateKind.RZ, (0,), (float("nan"),))

    def test_observable_register_mismatch(self):
        with pytest.raises(QubitCountError):
            expectation(StateVector.zero(2), Observable.pauli_z(0, 3))

    def test_invalid_pauli_string(self):
        with pytest.raises(SimulationError):
            Observable(((1.0, "ZA"),))

    def test_wrong_amplitude_count(self):
        with pytest.raises(SimulationError):
            StateVector(2, np.ones(3))

    def test_dense_limit(self):
        with pytest.raises(RegisterTooLargeError):
            embed_operator(np.eye(2), [0], 11)


class TestDenseOracle:
    """Tests comparing tensor-contraction kernels against Kronecker products"""

    def test_random_gates_match_dense(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 5))
            state = StateVector.random(n, rng)
            gate = random_gate(rng, n)
            fast = apply_gate(state, gate).amplitudes
            dense = dense_oracle_apply(state, gate).amplitudes
            assert np.max(np.abs(fast - dense)) < 1e-12

    def test_norm_conserved_over_long_circuit(self, rng):
        state = StateVector.random(6, rng)
        for _ in range(50):
            state = apply_gate(state, random_gate(rng, 6))
        assert state.norm() == pytest.approx(1.0, abs=1e-10)

    def test_haar_unitary_on_reversed_targets(self, rng):
        u = unitary_group.rvs(4, random_state=5)
        state = StateVector.random(3, rng)
        fast = apply_matrix(state.amplitudes, u, [2, 0], 3)
        np.testing.assert_allclose(fast, embed_operator(u, [2, 0], 3) @ state.amplitudes, atol=1e-12)
        assert np.linalg.norm(fast) == pytest.approx(1.0, abs=1e-12)

    def test_observable_matrix_matches_apply(self, rng):
        obs = Observable(((1.0, "XZ"), (-0.5, "YY")))
        state = StateVector.random(2, rng)
        np.testing.assert_allclose(obs.apply(state.amplitudes), obs.matrix() @ state.amplitudes, atol=1e-14)


class TestMeasurementNoise:
    """Tests for inject_measurement_noise"""

    def test_zero_bound_is_identity_and_draws_nothing(self, rng):
        state = StateVector.random(3, rng)
        before = rng.bit_generator.state
        noisy = inject_measurement_noise(state, 0.0, rng)
        np.testing.assert_array_equal(noisy.amplitudes, state.amplitudes)
        assert rng.bit_generator.state == before

    def test_same_seed_same_realization(self):
        state = StateVector.zero(3)
        a = inject_measurement_noise(state, 0.15, np.random.default_rng(9))
        b = inject_measurement_noise(state, 0.15, np.random.default_rng(9))
        np.testing.assert_array_equal(a.amplitudes, b.amplitudes)

    def test_noise_preserves_norm_and_shifts_z(self):
        state = inject_measurement_noise(StateVector.zero(2), 0.15, np.random.default_rng(0))
        assert state.norm() == pytest.approx(1.0, abs=1e-12)
        z = expectation(state, Observable.pauli_z(0, 2))
        assert np.cos(0.15) - 1e-12 <= z <= 1.0

    def test_negative_bound_rejected(self, rng):
        with pytest.raises(SimulationError):
            inject_measurement_noise(StateVector.zero(1), -0.1, rng)
