# Quantum simulation package
from .statevector import (
    Gate,
    GateKind,
    Observable,
    StateVector,
    apply_gate,
    expectation,
    dense_oracle_apply,
    inject_measurement_noise,
)
from .reuploading import (
    CircuitSpec,
    CircuitParams,
    Entangler,
    Preparation,
    circuit_forward,
    circuit_gradient_paramshift,
    circuit_gradient_adjoint,
)

__all__ = [
    "Gate",
    "GateKind",
    "Observable",
    "StateVector",
    "apply_gate",
    "expectation",
    "dense_oracle_apply",
    "inject_measurement_noise",
    "CircuitSpec",
    "CircuitParams",
    "Entangler",
    "Preparation",
    "circuit_forward",
    "circuit_gradient_paramshift",
    "circuit_gradient_adjoint",
]
