"""
Data re-uploading circuit: L repetitions of [encoding layer S(h), parameter layer W].

S(h) applies RZ(w_q * h_j) on every wire q of feature group j. W is K blocks of
(Rot on every wire, then an entangler ring). Outputs are the expectation values
of the configured observables. Forward and adjoint passes are vectorised over a
batch of inputs: every sample owns its own statevector, parameters are shared.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config import get_logger
from src.quantum.statevector import (
    Gate,
    GateKind,
    Observable,
    StateVector,
    apply_matrix,
    apply_matrix_batch,
    basis_bits,
    expectation,
    pair_contraction,
    rot,
    rot_derivatives,
    run_gates,
    z_eigenvalues,
)

logger = get_logger(__name__)

SHIFT = np.pi / 2


class CircuitError(Exception):
    """Base exception for re-uploading circuit errors."""
    pass


class CircuitShapeError(CircuitError):
    """Raised when inputs or parameters do not match the circuit spec."""
    pass


class NonFiniteInputError(CircuitError):
    """Raised when an input feature is NaN or infinite."""
    pass


class GradientUnavailableError(CircuitError):
    """Raised when a gradient is requested for a noisy circuit."""
    pass


class Entangler(str, Enum):
    CNOT_RING = "CNOT_ring"
    CZ_RING = "CZ_ring"


class Preparation(str, Enum):
    """Parameter-free layer applied to every wire before the first encoding."""
    NONE = "none"
    HADAMARD = "hadamard"
    RY_HALF_PI = "ry_half_pi"


_PREPARATION_KETS = {
    Preparation.NONE: np.array([1.0, 0.0], dtype=complex),
    Preparation.HADAMARD: np.array([1.0, 1.0], dtype=complex) / np.sqrt(2),
    Preparation.RY_HALF_PI: np.array([1.0, 1.0], dtype=complex) / np.sqrt(2),
}


@dataclass(frozen=True)
class CircuitSpec:
    """Declarative description of a data re-uploading circuit.

    Attributes:
        num_qubits: Number of input features d_h (one wire group per feature)
        reuploads: Number of [encoding, parameter] repetitions L
        blocks: Rot + entangler blocks per parameter layer K
        entangler: Ring of CNOT or CZ gates closing each block
        qubits_per_feature: Wires per feature group d
        observables: Measured observables; defaults to Z on the first d_h wires
        noise_bound: Upper bound of the RX measurement-noise angle
        encoding_weights: Per-wire encoding scale within a group (length d)
        preparation: Fixed layer applied before the first encoding
    """
    num_qubits: int
    reuploads: int = 3
    blocks: int = 2
    entangler: Entangler = Entangler.CNOT_RING
    qubits_per_feature: int = 1
    observables: Tuple[Observable, ...] = ()
    noise_bound: float = 0.0
    encoding_weights: Tuple[float, ...] = ()
    preparation: Preparation = Preparation.NONE

    def __post_init__(self):
        object.__setattr__(self, "entangler", Entangler(self.entangler))
        object.__setattr__(self, "preparation", Preparation(self.preparation))
        if self.num_qubits < 1 or self.qubits_per_feature < 1:
            raise CircuitError("num_qubits and qubits_per_feature must be >= 1")
        if self.reuploads < 1 or self.blocks < 1:
            raise CircuitError("reuploads and blocks must be >= 1")
        if self.noise_bound < 0:
            raise CircuitError(f"noise_bound must be non-negative, got {self.noise_bound}")
        weights = tuple(float(w) for w in self.encoding_weights) or (1.0,) * self.qubits_per_feature
        if len(weights) != self.qubits_per_feature:
            raise CircuitError(
                f"encoding_weights needs {self.qubits_per_feature} entries, got {len(weights)}"
            )
        object.__setattr__(self, "encoding_weights", weights)
        observables = tuple(self.observables) or tuple(
            Observable.pauli_z(q, self.wires) for q in range(self.num_qubits)
        )
        for obs in observables:
            if obs.num_qubits != self.wires:
                raise CircuitError(
                    f"Observable acts on {obs.num_qubits} qubits, circuit has {self.wires}"
                )
        object.__setattr__(self, "observables", observables)

    @property
    def wires(self) -> int:
        return self.num_qubits * self.qubits_per_feature

    @property
    def num_outputs(self) -> int:
        return len(self.observables)

    @property
    def param_shape(self) -> Tuple[int, int, int, int]:
        return (self.reuploads, self.blocks, self.wires, 3)

    @property
    def num_params(self) -> int:
        return int(np.prod(self.param_shape))

    def with_noise(self, noise_bound: float) -> "CircuitSpec":
        return replace(self, noise_bound=noise_bound)

    def ring_pairs(self) -> List[Tuple[int, int]]:
        """Entangler pairs (q, q+1 mod n); a two-wire ring has a single gate."""
        n = self.wires
        if n == 1:
            return []
        if n == 2:
            return [(0, 1)]
        return [(q, (q + 1) % n) for q in range(n)]

    def to_dict(self) -> Dict[str, Any]:
        """Convert the circuit layout to a JSON-serializable dictionary."""
        return {
            "num_qubits": self.num_qubits,
            "reuploads": self.reuploads,
            "blocks": self.blocks,
            "entangler": self.entangler.value,
            "qubits_per_feature": self.qubits_per_feature,
            "observables": [[list(t) for t in obs.terms] for obs in self.observables],
            "noise_bound": self.noise_bound,
            "encoding_weights": list(self.encoding_weights),
            "preparation": self.preparation.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CircuitSpec":
        """Create a CircuitSpec from a dictionary."""
        observables = tuple(
            Observable(tuple((c, p) for c, p in terms)) for terms in data.get("observables", [])
        )
        return cls(
            num_qubits=data["num_qubits"],
            reuploads=data.get("reuploads", 3),
            blocks=data.get("blocks", 2),
            entangler=data.get("entangler", Entangler.CNOT_RING.value),
            qubits_per_feature=data.get("qubits_per_feature", 1),
            observables=observables,
            noise_bound=data.get("noise_bound", 0.0),
            encoding_weights=tuple(data.get("encoding_weights", ())),
            preparation=data.get("preparation", Preparation.NONE.value),
        )


@dataclass
class CircuitParams:
    """Trainable Rot angles shaped [L][K][wires][3], radians."""
    angles: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=np.float64)

    @classmethod
    def initialize(cls, spec: CircuitSpec, rng: np.random.Generator) -> "CircuitParams":
        """Uniform on [-pi, pi] per angle."""
        return cls(rng.uniform(-np.pi, np.pi, size=spec.param_shape))

    @classmethod
    def zeros(cls, spec: CircuitSpec) -> "CircuitParams":
        return cls(np.zeros(spec.param_shape))

    def validate(self, spec: CircuitSpec) -> None:
        if self.angles.shape != spec.param_shape:
            raise CircuitShapeError(
                f"Parameter shape {self.angles.shape} does not match {spec.param_shape}"
            )
        if not np.all(np.isfinite(self.angles)):
            raise NonFiniteInputError("Circuit parameters contain non-finite values")


@dataclass
class CircuitGradient:
    """Jacobian of the circuit outputs.

    Attributes:
        params: d f_k / d angle, shape (d_f, L, K, wires, 3)
        inputs: d f_k / d h_j, shape (d_f, d_h)
    """
    params: np.ndarray
    inputs: np.ndarray


# ============================================================================
# Precomputed circuit structure
# ============================================================================

@dataclass(frozen=True)
class _Plan:
    wires: int
    zeig: np.ndarray
    initial: np.ndarray
    gather: Optional[np.ndarray]
    scatter: Optional[np.ndarray]
    signs: Optional[np.ndarray]
    diagonals: Optional[np.ndarray]

    def entangle(self, psi: np.ndarray) -> np.ndarray:
        if self.gather is not None:
            return psi[..., self.gather]
        if self.signs is not None:
            return psi * self.signs
        return psi

    def disentangle(self, psi: np.ndarray) -> np.ndarray:
        if self.scatter is not None:
            return psi[..., self.scatter]
        if self.signs is not None:
            return psi * self.signs
        return psi


@lru_cache(maxsize=64)
def _plan(spec: CircuitSpec) -> _Plan:
    n = spec.wires
    bits = basis_bits(n)
    idx = np.arange(2 ** n)
    gather = scatter = signs = None
    pairs = spec.ring_pairs()
    if pairs and spec.entangler == Entangler.CNOT_RING:
        gather = idx.copy()
        for control, target in pairs:
            flip = idx ^ (bits[control] << (n - 1 - target))
            gather = gather[flip]
        scatter = np.argsort(gather)
    elif pairs:
        parity = np.zeros(2 ** n, dtype=int)
        for a, b in pairs:
            parity += bits[a] * bits[b]
        signs = (1 - 2 * (parity % 2)).astype(np.float64)

    ket = _PREPARATION_KETS[spec.preparation]
    initial = np.array([1.0 + 0j])
    for _ in range(n):
        initial = np.kron(initial, ket)

    diagonals = None
    if all(obs.is_diagonal for obs in spec.observables):
        diagonals = np.stack([obs.diagonal() for obs in spec.observables])

    return _Plan(n, z_eigenvalues(n).astype(np.float64), initial, gather, scatter, signs, diagonals)


def _check_inputs(spec: CircuitSpec, params: CircuitParams, inputs: np.ndarray) -> np.ndarray:
    params.validate(spec)
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != spec.num_qubits:
        raise CircuitShapeError(
            f"Expected inputs of shape (batch, {spec.num_qubits}), got {inputs.shape}"
        )
    if not np.all(np.isfinite(inputs)):
        raise NonFiniteInputError("Circuit inputs contain NaN or infinite values")
    return inputs


def _encoding_angles(spec: CircuitSpec, inputs: np.ndarray) -> np.ndarray:
    """Per-occurrence encoding angles, shape (batch, L, wires)."""
    groups = np.repeat(np.arange(spec.num_qubits), spec.qubits_per_feature)
    weights = np.tile(spec.encoding_weights, spec.num_qubits)
    per_wire = inputs[:, groups] * weights
    return np.repeat(per_wire[:, None, :], spec.reuploads, axis=1)


def _simulate(spec: CircuitSpec, angles: np.ndarray, enc: np.ndarray) -> np.ndarray:
    """Noiseless final states, shape (batch, 2^wires)."""
    plan = _plan(spec)
    n = plan.wires
    psi = np.repeat(plan.initial[None, :], enc.shape[0], axis=0)
    for layer in range(spec.reuploads):
        psi = psi * np.exp(-0.5j * (enc[:, layer, :] @ plan.zeig))
        for block in range(spec.blocks):
            for q in range(n):
                psi = apply_matrix(psi, rot(*angles[layer, block, q]), [q], n)
            psi = plan.entangle(psi)
    return psi


def sample_noise(
    spec: CircuitSpec,
    batch: int,
    rng: Optional[np.random.Generator],
) -> Optional[np.ndarray]:
    """Draw measurement-noise angles theta ~ U(0, noise_bound), shape (batch, wires).

    Returns None for a noiseless spec without touching the generator.
    """
    if spec.noise_bound == 0:
        return None
    if rng is None:
        raise CircuitError("A seeded generator is required when noise_bound > 0")
    return rng.uniform(0.0, spec.noise_bound, size=(batch, spec.wires))


def _noise_layer(psi: np.ndarray, thetas: Optional[np.ndarray], n: int, inverse: bool = False) -> np.ndarray:
    """Per-sample RX(theta) on every wire; `inverse` applies the adjoint."""
    if thetas is None:
        return psi
    sign = -1.0 if inverse else 1.0
    for q in range(n):
        c, s = np.cos(thetas[:, q] / 2), sign * np.sin(thetas[:, q] / 2)
        mats = np.empty((psi.shape[0], 2, 2), dtype=complex)
        mats[:, 0, 0] = c
        mats[:, 0, 1] = -1j * s
        mats[:, 1, 0] = -1j * s
        mats[:, 1, 1] = c
        psi = apply_matrix_batch(psi, mats, q, n)
    return psi


def _measure(spec: CircuitSpec, psi: np.ndarray) -> np.ndarray:
    plan = _plan(spec)
    if plan.diagonals is not None:
        return (np.abs(psi) ** 2) @ plan.diagonals.T
    return np.stack(
        [np.real(np.sum(np.conj(psi) * obs.apply(psi), axis=-1)) for obs in spec.observables],
        axis=-1,
    )


# ============================================================================
# Forward
# ============================================================================

def circuit_forward_batch(
    spec: CircuitSpec,
    params: CircuitParams,
    inputs: np.ndarray,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Circuit outputs for a batch of inputs, shape (batch, d_f).

    Noise angles are drawn from `rng` unless a realization is passed in `noise`.
    """
    inputs = _check_inputs(spec, params, inputs)
    if noise is None:
        noise = sample_noise(spec, inputs.shape[0], rng)
    psi = _simulate(spec, params.angles, _encoding_angles(spec, inputs))
    return _measure(spec, _noise_layer(psi, noise, spec.wires))


def circuit_forward(
    spec: CircuitSpec,
    params: CircuitParams,
    h: Sequence[float],
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Circuit outputs [<O_1>, ..., <O_df>] for one input vector."""
    return circuit_forward_batch(spec, params, np.asarray(h, dtype=np.float64)[None, :], rng)[0]


def circuit_gates(spec: CircuitSpec, params: CircuitParams, h: Sequence[float]) -> List[Gate]:
    """Explicit gate list of the noiseless circuit, preparation included."""
    enc = _encoding_angles(spec, np.asarray(h, dtype=np.float64)[None, :])[0]
    gates: List[Gate] = []
    for q in range(spec.wires):
        if spec.preparation == Preparation.HADAMARD:
            gates.append(Gate(GateKind.H, (q,)))
        elif spec.preparation == Preparation.RY_HALF_PI:
            gates.append(Gate(GateKind.RY, (q,), (np.pi / 2,)))
    ring_kind = GateKind.CNOT if spec.entangler == Entangler.CNOT_RING else GateKind.CZ
    for layer in range(spec.reuploads):
        gates.extend(Gate(GateKind.RZ, (q,), (enc[layer, q],)) for q in range(spec.wires))
        for block in range(spec.blocks):
            gates.extend(
                Gate(GateKind.ROT, (q,), tuple(params.angles[layer, block, q]))
                for q in range(spec.wires)
            )
            gates.extend(Gate(ring_kind, pair) for pair in spec.ring_pairs())
    return gates


def circuit_forward_reference(spec: CircuitSpec, params: CircuitParams, h: Sequence[float]) -> np.ndarray:
    """Gate-by-gate evaluation through apply_gate; reference for the batched engine."""
    state = run_gates(StateVector.zero(spec.wires), circuit_gates(spec, params, h))
    return np.array([expectation(state, obs) for obs in spec.observables])


# ============================================================================
# Gradients
# ============================================================================

def _require_noiseless(spec: CircuitSpec) -> None:
    if spec.noise_bound > 0:
        raise GradientUnavailableError(
            f"Gradients are defined for the noiseless circuit (noise_bound={spec.noise_bound})"
        )


def _fold_inputs(spec: CircuitSpec, enc_grad: np.ndarray) -> np.ndarray:
    """Chain per-occurrence encoding gradients (..., L, wires) into d/dh (..., d_h)."""
    weights = np.tile(spec.encoding_weights, spec.num_qubits)
    per_wire = (enc_grad * weights).sum(axis=-2)
    return per_wire.reshape(per_wire.shape[:-1] + (spec.num_qubits, spec.qubits_per_feature)).sum(axis=-1)


def circuit_gradient_paramshift(
    spec: CircuitSpec,
    params: CircuitParams,
    h: Sequence[float],
    wrt: str = "params",
) -> np.ndarray:
    """Parameter-shift Jacobian [f(theta + pi/2) - f(theta - pi/2)] / 2.

    Args:
        wrt: "params" for shape (d_f, L, K, wires, 3), "inputs" for (d_f, d_h)

    Raises:
        GradientUnavailableError: If the circuit is noisy
    """
    _require_noiseless(spec)
    inputs = _check_inputs(spec, params, np.asarray(h, dtype=np.float64)[None, :])
    enc = _encoding_angles(spec, inputs)

    if wrt == "params":
        jac = np.zeros((spec.num_outputs,) + spec.param_shape)
        for idx in np.ndindex(*spec.param_shape):
            plus = params.angles.copy()
            minus = params.angles.copy()
            plus[idx] += SHIFT
            minus[idx] -= SHIFT
            f_plus = _measure(spec, _simulate(spec, plus, enc))[0]
            f_minus = _measure(spec, _simulate(spec, minus, enc))[0]
            jac[(slice(None),) + idx] = (f_plus - f_minus) / 2
        return jac

    if wrt == "inputs":
        occurrences = list(np.ndindex(spec.reuploads, spec.wires))
        shifted = np.repeat(enc, 2 * len(occurrences), axis=0)
        for i, (layer, q) in enumerate(occurrences):
            shifted[2 * i, layer, q] += SHIFT
            shifted[2 * i + 1, layer, q] -= SHIFT
        out = _measure(spec, _simulate(spec, params.angles, shifted))
        diffs = (out[0::2] - out[1::2]) / 2
        enc_grad = diffs.T.reshape(spec.num_outputs, spec.reuploads, spec.wires)
        return _fold_inputs(spec, enc_grad)

    raise ValueError(f"wrt must be 'params' or 'inputs', got {wrt!r}")


def _adjoint_sweep(
    spec: CircuitSpec,
    angles: np.ndarray,
    enc: np.ndarray,
    cotangent: np.ndarray,
    noise: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """One forward and one backward statevector sweep.

    Returns per-sample gradients of sum_k cotangent[b, k] <O_k>:
    parameters (batch, L, K, wires, 3) and encoding angles (batch, L, wires).
    A fixed noise realization is treated as constant gates before measurement.
    """
    plan = _plan(spec)
    n = plan.wires
    batch = enc.shape[0]
    psi = _noise_layer(_simulate(spec, angles, enc), noise, n)

    if plan.diagonals is not None:
        lam = (cotangent @ plan.diagonals) * psi
    else:
        lam = np.zeros_like(psi)
        for k, obs in enumerate(spec.observables):
            lam = lam + cotangent[:, k, None] * obs.apply(psi)
    psi = _noise_layer(psi, noise, n, inverse=True)
    lam = _noise_layer(lam, noise, n, inverse=True)

    grad_params = np.zeros((batch,) + spec.param_shape)
    grad_enc = np.zeros((batch, spec.reuploads, n))
    for layer in reversed(range(spec.reuploads)):
        for block in reversed(range(spec.blocks)):
            psi = plan.disentangle(psi)
            lam = plan.disentangle(lam)
            for q in reversed(range(n)):
                theta = angles[layer, block, q]
                u_dag = rot(*theta).conj().T
                psi = apply_matrix(psi, u_dag, [q], n)
                m = pair_contraction(lam, psi, q, n)
                for a, du in enumerate(rot_derivatives(*theta)):
                    grad_params[:, layer, block, q, a] = 2 * np.real(np.einsum("ac,bac->b", du, m))
                lam = apply_matrix(lam, u_dag, [q], n)
        grad_enc[:, layer, :] = np.imag(np.conj(lam) * psi) @ plan.zeig.T
        phase = np.conj(np.exp(-0.5j * (enc[:, layer, :] @ plan.zeig)))
        psi = psi * phase
        lam = lam * phase
    return grad_params, grad_enc


def circuit_gradient_adjoint(
    spec: CircuitSpec,
    params: CircuitParams,
    h: Sequence[float],
) -> CircuitGradient:
    """Full Jacobian by adjoint differentiation.

    The d_f output cotangents are stacked as a batch, so the Jacobian costs one
    batched forward and one batched backward sweep.
    """
    _require_noiseless(spec)
    inputs = _check_inputs(spec, params, np.asarray(h, dtype=np.float64)[None, :])
    d_f = spec.num_outputs
    enc = _encoding_angles(spec, np.repeat(inputs, d_f, axis=0))
    grad_params, grad_enc = _adjoint_sweep(spec, params.angles, enc, np.eye(d_f))
    return CircuitGradient(params=grad_params, inputs=_fold_inputs(spec, grad_enc))


def circuit_vjp(
    spec: CircuitSpec,
    params: CircuitParams,
    inputs: np.ndarray,
    grad_out: np.ndarray,
    noise: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Vector-Jacobian product for a batch.

    Args:
        inputs: Batch of circuit inputs, shape (batch, d_h)
        grad_out: Upstream gradient, shape (batch, d_f)
        noise: Noise realization used in the forward pass; required when the
            spec is noisy, since only a fixed realization is differentiable

    Returns:
        (parameter gradient summed over the batch, input gradient (batch, d_h))
    """
    if noise is None:
        _require_noiseless(spec)
    inputs = _check_inputs(spec, params, inputs)
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if grad_out.shape != (inputs.shape[0], spec.num_outputs):
        raise CircuitShapeError(
            f"Expected grad_out of shape {(inputs.shape[0], spec.num_outputs)}, got {grad_out.shape}"
        )
    grad_params, grad_enc = _adjoint_sweep(
        spec, params.angles, _encoding_angles(spec, inputs), grad_out, noise
    )
    return grad_params.sum(axis=0), _fold_inputs(spec, grad_enc)


def benchmark_gradients(spec: CircuitSpec, params: CircuitParams, h: Sequence[float]) -> Dict[str, float]:
    """Wall-clock of full-Jacobian adjoint versus parameter shift.

    The speedup is a soft target; it is logged and returned, never asserted.
    """
    start = time.perf_counter()
    circuit_gradient_adjoint(spec, params, h)
    adjoint_s = time.perf_counter() - start
    start = time.perf_counter()
    circuit_gradient_paramshift(spec, params, h, wrt="params")
    circuit_gradient_paramshift(spec, params, h, wrt="inputs")
    shift_s = time.perf_counter() - start
    ratio = shift_s / adjoint_s if adjoint_s > 0 else float("inf")
    logger.info(f"Gradient benchmark: adjoint={adjoint_s:.4f}s shift={shift_s:.4f}s speedup={ratio:.1f}x")
    return {"adjoint_seconds": adjoint_s, "paramshift_seconds": shift_s, "speedup": ratio}
