"""
Model families: QIREN hybrids, classical MLP baselines and the pure quantum model.
"""
from typing import List, Union

import numpy as np

from src.config import get_logger
from src.models import Family, ModelConfig
from src.nn.layers import (
    BatchNormLayer,
    Layer,
    LayerStack,
    LinearLayer,
    QuantumLayer,
    ReLU,
    ReplicateLayer,
    RFFLayer,
    Sine,
    Tanh,
)
from src.quantum.reuploading import CircuitParams, CircuitSpec
from src.quantum.statevector import Observable

logger = get_logger(__name__)


class ModelError(Exception):
    """Base exception for model construction errors."""
    pass


class UnknownFamilyError(ModelError):
    """Raised when a config names a family that does not exist."""
    pass


def _family(config: ModelConfig) -> Family:
    try:
        return Family(config.family)
    except ValueError:
        raise UnknownFamilyError(f"Unknown model family: {config.family}")


def _check_config(config: ModelConfig) -> Family:
    family = _family(config)
    if config.d_in < 1 or config.d_out < 1:
        raise ModelError(f"d_in and d_out must be >= 1, got {config.d_in}, {config.d_out}")
    if family == Family.QIREN and config.hidden_dim != config.qubits:
        raise ModelError(
            f"QIREN needs hidden_dim == qubits, got {config.hidden_dim} and {config.qubits}"
        )
    if family == Family.PURE_QUANTUM and config.d_out > config.qubits:
        raise ModelError(f"pure_quantum measures at most {config.qubits} outputs")
    if family != Family.PURE_QUANTUM and config.depth < 1:
        raise ModelError(f"depth must be >= 1, got {config.depth}")
    return family


def circuit_spec(config: ModelConfig, observables=()) -> CircuitSpec:
    """Circuit used by every quantum layer of the model."""
    return CircuitSpec(
        num_qubits=config.qubits,
        reuploads=config.reuploads,
        blocks=config.blocks,
        entangler=config.entangler,
        observables=tuple(observables),
        noise_bound=config.noise_bound,
        preparation=config.preparation,
    )


def _mlp(config: ModelConfig, family: Family, rngs: List[np.random.Generator]) -> List[Layer]:
    h = config.hidden_dim
    activation = {Family.RELU: ReLU, Family.TANH: Tanh, Family.RELU_RFF: ReLU}
    layers: List[Layer] = []

    if family == Family.SIREN:
        layers += [LinearLayer.initialize(config.d_in, h, rngs[0], "siren_first"), Sine(config.omega0)]
        for i in range(config.depth):
            layers += [
                LinearLayer.initialize(h, h, rngs[i + 1], "siren_hidden", config.omega0),
                Sine(config.omega0),
            ]
        last = LinearLayer.initialize(h, config.d_out, rngs[-1], "siren_hidden", config.omega0)
        return layers + [last]

    if family == Family.RELU_RFF:
        rff = RFFLayer.initialize(config.d_in, config.rff_features, rngs[0], config.rff_sigma)
        layers.append(rff)
        width = rff.out_features
    else:
        layers.append(LinearLayer.initialize(config.d_in, h, rngs[0]))
        if config.batchnorm:
            layers.append(BatchNormLayer(h))
        layers.append(activation[family]())
        width = h

    for i in range(config.depth):
        layers.append(LinearLayer.initialize(width, h, rngs[i + 1]))
        if config.batchnorm:
            layers.append(BatchNormLayer(h))
        layers.append(activation[family]())
        width = h
    layers.append(LinearLayer.initialize(width, config.d_out, rngs[-1]))
    return layers


def _qiren(config: ModelConfig, seqs: List[np.random.SeedSequence]) -> List[Layer]:
    spec = circuit_spec(config)
    layers: List[Layer] = []
    width = config.d_in
    for n in range(config.depth):
        linear_rng, circuit_rng, noise_rng = (np.random.default_rng(s) for s in seqs[n].spawn(3))
        layers.append(LinearLayer.initialize(width, config.hidden_dim, linear_rng))
        if config.batchnorm:
            layers.append(BatchNormLayer(config.hidden_dim))
        layers.append(QuantumLayer(spec, CircuitParams.initialize(spec, circuit_rng), noise_rng))
        width = spec.num_outputs
    layers.append(LinearLayer.initialize(width, config.d_out, np.random.default_rng(seqs[-1])))
    return layers


def _pure_quantum(config: ModelConfig, seqs: List[np.random.SeedSequence]) -> List[Layer]:
    observables = [Observable.pauli_z(q, config.qubits) for q in range(config.d_out)]
    spec = circuit_spec(config, observables)
    circuit_rng, noise_rng = (np.random.default_rng(s) for s in seqs[0].spawn(2))
    return [
        ReplicateLayer(config.d_in, config.qubits),
        QuantumLayer(spec, CircuitParams.initialize(spec, circuit_rng), noise_rng),
    ]


def build_model(config: ModelConfig) -> LayerStack:
    """Build a freshly initialized model; the same config always yields the same parameters.

    Raises:
        UnknownFamilyError: If the family is not recognized
        ModelError: If the architecture is inconsistent
    """
    family = _check_config(config)
    stages = max(config.depth, 1) + 2
    seqs = np.random.SeedSequence(config.seed).spawn(stages)

    if family == Family.QIREN:
        layers = _qiren(config, seqs)
    elif family == Family.PURE_QUANTUM:
        layers = _pure_quantum(config, seqs)
    else:
        layers = _mlp(config, family, [np.random.default_rng(s) for s in seqs])

    model = LayerStack(layers, config=config)
    logger.debug(f"Built {config}: {model!r} ({model.num_params} params)")
    return model


def count_params(config: ModelConfig) -> int:
    """Trainable parameter count of `config` computed from its architecture alone."""
    family = _check_config(config)
    h, d_in, d_out, depth = config.hidden_dim, config.d_in, config.d_out, config.depth
    circuit = config.reuploads * config.blocks * config.qubits * 3
    bn = 2 * h if config.batchnorm else 0

    if family == Family.PURE_QUANTUM:
        return circuit
    if family == Family.QIREN:
        first = d_in * h + h + bn + circuit
        rest = (depth - 1) * (config.qubits * h + h + bn + circuit)
        return first + rest + config.qubits * d_out + d_out
    if family == Family.SIREN:
        return d_in * h + h + depth * (h * h + h) + h * d_out + d_out
    if family == Family.RELU_RFF:
        width = 2 * config.rff_features
        hidden = (width * h + h + bn) + (depth - 1) * (h * h + h + bn)
        return hidden + h * d_out + d_out
    # relu / tanh
    return (d_in * h + h + bn) + depth * (h * h + h + bn) + h * d_out + d_out


def memory_saving(params: Union[int, ModelConfig], dataset_size: int) -> float:
    """Percentage of the dataset size saved by storing the model instead: 100 * (1 - params / size).

    Negative when the model is larger than the data.
    """
    if dataset_size <= 0:
        raise ModelError(f"dataset_size must be positive, got {dataset_size}")
    count = count_params(params) if isinstance(params, ModelConfig) else int(params)
    saving = 100.0 * (1.0 - count / dataset_size)
    if saving < 0:
        logger.warning(f"Model has {count} params for {dataset_size} samples: no memory saved")
    return saving
