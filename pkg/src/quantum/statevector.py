"""
Statevector simulation of n-qubit registers.

Qubit 0 is the most significant bit of the amplitude index. All kernels accept
amplitude arrays with optional leading batch dimensions, so the same code path
serves a single StateVector and a batch of per-sample states.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple

import numpy as np

from src.config import get_logger

logger = get_logger(__name__)

MAX_DENSE_QUBITS = 10


class SimulationError(Exception):
    """Base exception for statevector simulation errors."""
    pass


class GateError(SimulationError):
    """Raised when a gate has invalid targets or parameters."""
    pass


class QubitCountError(SimulationError):
    """Raised when an observable and a state disagree on the register size."""
    pass


class RegisterTooLargeError(SimulationError):
    """Raised when a dense 2^n x 2^n matrix would be too large to build."""
    pass


class GateKind(str, Enum):
    H = "H"
    X = "X"
    Y = "Y"
    Z = "Z"
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    ROT = "Rot"
    CNOT = "CNOT"
    CZ = "CZ"


PARAM_COUNT = {
    GateKind.H: 0, GateKind.X: 0, GateKind.Y: 0, GateKind.Z: 0,
    GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1,
    GateKind.ROT: 3,
    GateKind.CNOT: 0, GateKind.CZ: 0,
}

TARGET_COUNT = {kind: 1 for kind in GateKind}
TARGET_COUNT[GateKind.CNOT] = 2
TARGET_COUNT[GateKind.CZ] = 2


# ============================================================================
# Gate matrices
# ============================================================================

_SQRT2_INV = 1 / np.sqrt(2)

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_FIXED = {
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV,
    GateKind.X: PAULI["X"],
    GateKind.Y: PAULI["Y"],
    GateKind.Z: PAULI["Z"],
    GateKind.CNOT: np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    GateKind.CZ: np.diag([1, 1, 1, -1]).astype(complex),
}


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    """RZ in the e^{-i theta Z / 2} convention."""
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


def rot(phi: float, theta: float, omega: float) -> np.ndarray:
    """General single-qubit rotation RZ(phi) . RY(theta) . RZ(omega)."""
    return rz(phi) @ ry(theta) @ rz(omega)


def rot_derivatives(phi: float, theta: float, omega: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Partial derivatives of the Rot matrix with respect to (phi, theta, omega)."""
    a, b, c = rz(phi), ry(theta), rz(omega)
    half_z = -0.5j * PAULI["Z"]
    half_y = -0.5j * PAULI["Y"]
    return (
        half_z @ a @ b @ c,
        a @ half_y @ b @ c,
        a @ b @ half_z @ c,
    )


@dataclass(frozen=True)
class Gate:
    """A gate acting on `targets`; for CNOT targets are (control, target)."""
    kind: GateKind
    targets: Tuple[int, ...]
    params: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.params) != PARAM_COUNT[self.kind]:
            raise GateError(
                f"{self.kind.value} takes {PARAM_COUNT[self.kind]} parameters, got {len(self.params)}"
            )
        if len(self.targets) != TARGET_COUNT[self.kind]:
            raise GateError(
                f"{self.kind.value} acts on {TARGET_COUNT[self.kind]} qubits, got {len(self.targets)}"
            )
        if len(set(self.targets)) != len(self.targets):
            raise GateError(f"Gate targets must be distinct: {self.targets}")
        if not np.all(np.isfinite(self.params)):
            raise GateError(f"Gate parameters must be finite: {self.params}")

    def matrix(self) -> np.ndarray:
        """Unitary of the gate on its own targets (2x2 or 4x4)."""
        if self.kind in _FIXED:
            return _FIXED[self.kind]
        if self.kind == GateKind.RX:
            return rx(*self.params)
        if self.kind == GateKind.RY:
            return ry(*self.params)
        if self.kind == GateKind.RZ:
            return rz(*self.params)
        return rot(*self.params)

    def check_register(self, num_qubits: int) -> None:
        for t in self.targets:
            if t < 0 or t >= num_qubits:
                raise GateError(
                    f"Target qubit {t} out of range for a {num_qubits}-qubit register"
                )

    def __str__(self) -> str:
        params = ", ".join(f"{p:.4f}" for p in self.params)
        return f"{self.kind.value}{self.targets}({params})"


# ============================================================================
# Kernels
# ============================================================================

def basis_bits(num_qubits: int) -> np.ndarray:
    """Bit table of shape (num_qubits, 2^n): entry [q, i] is bit q of index i."""
    idx = np.arange(2 ** num_qubits)
    shifts = num_qubits - 1 - np.arange(num_qubits)
    return (idx[None, :] >> shifts[:, None]) & 1


def z_eigenvalues(num_qubits: int) -> np.ndarray:
    """Eigenvalues (+1/-1) of Z on each qubit, shape (num_qubits, 2^n)."""
    return 1 - 2 * basis_bits(num_qubits)


def apply_matrix(
    amplitudes: np.ndarray,
    matrix: np.ndarray,
    targets: Sequence[int],
    num_qubits: int,
) -> np.ndarray:
    """Apply a 2^k x 2^k matrix on `targets`, broadcasting over leading batch axes."""
    k = len(targets)
    batch_shape = amplitudes.shape[:-1]
    offset = len(batch_shape)
    psi = amplitudes.reshape(batch_shape + (2,) * num_qubits)
    src = [offset + t for t in targets]
    dst = list(range(psi.ndim - k, psi.ndim))
    moved = np.moveaxis(psi, src, dst)
    shape = moved.shape
    out = (moved.reshape(-1, 2 ** k) @ matrix.T).reshape(shape)
    return np.moveaxis(out, dst, src).reshape(amplitudes.shape)


def apply_matrix_batch(
    amplitudes: np.ndarray,
    matrices: np.ndarray,
    qubit: int,
    num_qubits: int,
) -> np.ndarray:
    """Apply one 2x2 matrix per batch row: amplitudes (B, 2^n), matrices (B, 2, 2)."""
    batch = amplitudes.shape[0]
    psi = amplitudes.reshape((batch,) + (2,) * num_qubits)
    moved = np.moveaxis(psi, qubit + 1, -1)
    shape = moved.shape
    out = np.einsum("bij,brj->bri", matrices, moved.reshape(batch, -1, 2)).reshape(shape)
    return np.moveaxis(out, -1, qubit + 1).reshape(amplitudes.shape)


def pair_contraction(
    bra: np.ndarray,
    ket: np.ndarray,
    qubit: int,
    num_qubits: int,
) -> np.ndarray:
    """M[b, a, c] = sum over other qubits of conj(bra[b, ..a..]) * ket[b, ..c..].

    For a single-qubit operator D on `qubit`, <bra|D|ket> = sum_ac D[a, c] M[a, c].
    """
    batch = bra.shape[0]
    shape = (batch,) + (2,) * num_qubits
    b = np.moveaxis(bra.reshape(shape), qubit + 1, -1).reshape(batch, -1, 2)
    k = np.moveaxis(ket.reshape(shape), qubit + 1, -1).reshape(batch, -1, 2)
    return np.einsum("bra,brc->bac", np.conj(b), k)


# ============================================================================
# Domain types
# ============================================================================

@dataclass
class StateVector:
    """Pure state of a `num_qubits` register, complex128 amplitudes."""
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 1:
            raise SimulationError("A register needs at least one qubit")
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2 ** self.num_qubits,):
            raise SimulationError(
                f"Expected {2 ** self.num_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        """The |0...0> state."""
        amps = np.zeros(2 ** num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def basis(cls, bits: str) -> "StateVector":
        """Computational basis state from a bit string, e.g. "10"."""
        amps = np.zeros(2 ** len(bits), dtype=np.complex128)
        amps[int(bits, 2)] = 1.0
        return cls(len(bits), amps)

    @classmethod
    def random(cls, num_qubits: int, rng: np.random.Generator) -> "StateVector":
        """Haar-like random state from normalized complex Gaussians."""
        amps = rng.normal(size=2 ** num_qubits) + 1j * rng.normal(size=2 ** num_qubits)
        return cls(num_qubits, amps / np.linalg.norm(amps))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class Observable:
    """Real linear combination of Pauli strings, e.g. ((1.0, "ZI"), (0.5, "XX")).

    Character q of a Pauli string acts on qubit q.
    """
    terms: Tuple[Tuple[float, str], ...]

    def __post_init__(self):
        terms = tuple((float(c), str(p).upper()) for c, p in self.terms)
        if not terms:
            raise SimulationError("An observable needs at least one term")
        width = len(terms[0][1])
        for coeff, pauli in terms:
            if len(pauli) != width or set(pauli) - set("IXYZ"):
                raise SimulationError(f"Invalid Pauli string: {pauli!r}")
            if not np.isfinite(coeff):
                raise SimulationError(f"Observable coefficients must be finite: {coeff}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def pauli_z(cls, wire: int, num_qubits: int) -> "Observable":
        """Single-qubit Z on `wire`."""
        chars = ["I"] * num_qubits
        chars[wire] = "Z"
        return cls(((1.0, "".join(chars)),))

    @property
    def num_qubits(self) -> int:
        return len(self.terms[0][1])

    @property
    def is_diagonal(self) -> bool:
        return all(set(p) <= {"I", "Z"} for _, p in self.terms)

    def diagonal(self) -> np.ndarray:
        """Real diagonal of a Z/I-only observable, shape (2^n,)."""
        if not self.is_diagonal:
            raise SimulationError("Observable is not diagonal in the computational basis")
        z = z_eigenvalues(self.num_qubits)
        diag = np.zeros(2 ** self.num_qubits)
        for coeff, pauli in self.terms:
            term = np.ones(2 ** self.num_qubits)
            for q, p in enumerate(pauli):
                if p == "Z":
                    term = term * z[q]
            diag += coeff * term
        return diag

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        """O|psi>, broadcasting over leading batch axes."""
        if self.is_diagonal:
            return amplitudes * self.diagonal()
        out = np.zeros_like(amplitudes)
        for coeff, pauli in self.terms:
            term = amplitudes
            for q, p in enumerate(pauli):
                if p != "I":
                    term = apply_matrix(term, PAULI[p], [q], self.num_qubits)
            out = out + coeff * term
        return out

    def matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix of the observable."""
        if self.num_qubits > MAX_DENSE_QUBITS:
            raise RegisterTooLargeError(f"{self.num_qubits} qubits exceeds dense limit")
        out = np.zeros((2 ** self.num_qubits,) * 2, dtype=complex)
        for coeff, pauli in self.terms:
            term = np.array([[1.0 + 0j]])
            for p in pauli:
                term = np.kron(term, PAULI[p])
            out += coeff * term
        return out


# ============================================================================
# Operations
# ============================================================================

def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply `gate` to `state`, returning a new StateVector."""
    gate.check_register(state.num_qubits)
    amps = apply_matrix(state.amplitudes, gate.matrix(), gate.targets, state.num_qubits)
    return StateVector(state.num_qubits, amps)


def run_gates(state: StateVector, gates: Sequence[Gate]) -> StateVector:
    """Apply a sequence of gates in order."""
    for gate in gates:
        state = apply_gate(state, gate)
    return state


def expectation(state: StateVector, obs: Observable) -> float:
    """<psi|O|psi> for a Hermitian Pauli-sum observable."""
    if obs.num_qubits != state.num_qubits:
        raise QubitCountError(
            f"Observable acts on {obs.num_qubits} qubits, state has {state.num_qubits}"
        )
    if obs.is_diagonal:
        return float(np.dot(state.probabilities(), obs.diagonal()))
    return float(np.real(np.vdot(state.amplitudes, obs.apply(state.amplitudes))))


def embed_operator(matrix: np.ndarray, targets: Sequence[int], num_qubits: int) -> np.ndarray:
    """Full 2^n x 2^n matrix of an operator on `targets`, built from Kronecker products."""
    if num_qubits > MAX_DENSE_QUBITS:
        raise RegisterTooLargeError(
            f"Dense construction limited to {MAX_DENSE_QUBITS} qubits, got {num_qubits}"
        )
    k = len(targets)
    dim = 2 ** k
    full = np.zeros((2 ** num_qubits,) * 2, dtype=complex)
    for row in range(dim):
        for col in range(dim):
            if matrix[row, col] == 0:
                continue
            factors = [np.eye(2, dtype=complex)] * num_qubits
            for pos, t in enumerate(targets):
                shift = k - 1 - pos
                unit = np.zeros((2, 2), dtype=complex)
                unit[(row >> shift) & 1, (col >> shift) & 1] = 1.0
                factors[t] = unit
            term = np.array([[1.0 + 0j]])
            for f in factors:
                term = np.kron(term, f)
            full += matrix[row, col] * term
    return full


def dense_oracle_apply(state: StateVector, gate: Gate) -> StateVector:
    """Reference gate application through the full Kronecker-product matrix."""
    gate.check_register(state.num_qubits)
    full = embed_operator(gate.matrix(), gate.targets, state.num_qubits)
    return StateVector(state.num_qubits, full @ state.amplitudes)


def inject_measurement_noise(
    state: StateVector,
    noise_bound: float,
    rng: np.random.Generator,
) -> StateVector:
    """Apply RX(theta_q), theta_q ~ U(0, noise_bound), independently on every qubit."""
    if noise_bound < 0:
        raise SimulationError(f"noise_bound must be non-negative, got {noise_bound}")
    if noise_bound == 0:
        return state.copy()
    thetas = rng.uniform(0.0, noise_bound, size=state.num_qubits)
    for q, theta in enumerate(thetas):
        state = apply_gate(state, Gate(GateKind.RX, (q,), (theta,)))
    return state
