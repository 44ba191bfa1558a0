"""Pytest configuration and shared fixtures"""
import numpy as np
import pytest

from src.models import ModelConfig
from src.quantum.reuploading import CircuitParams, CircuitSpec, Preparation
from src.services.datasets import image_dataset, smooth_image, sound_dataset, two_tone


@pytest.fixture
def rng():
    """Seeded generator for reproducible random draws"""
    return np.random.default_rng(1234)


@pytest.fixture
def small_spec():
    """Two-qubit circuit with two re-uploads"""
    return CircuitSpec(num_qubits=2, reuploads=2, blocks=2, preparation=Preparation.HADAMARD)


@pytest.fixture
def small_params(small_spec):
    return CircuitParams.initialize(small_spec, np.random.default_rng(7))


@pytest.fixture
def minus_cos_spec():
    """Single-qubit circuit whose output is -cos(h) with Rot angles (0, pi/2, 0)"""
    return CircuitSpec(num_qubits=1, reuploads=1, blocks=1, preparation=Preparation.RY_HALF_PI)


@pytest.fixture
def minus_cos_params(minus_cos_spec):
    angles = np.zeros(minus_cos_spec.param_shape)
    angles[0, 0, 0] = [0.0, np.pi / 2, 0.0]
    return CircuitParams(angles)


@pytest.fixture
def tone_dataset():
    """Short two-tone signal on a periodic grid"""
    return two_tone(n=64, frequencies=(2, 5))


@pytest.fixture
def ramp_dataset():
    """Sixteen-sample linear ramp as a sound dataset"""
    return sound_dataset(np.arange(16, dtype=float), n=16, name="ramp")


@pytest.fixture
def small_image_dataset():
    """8x8 smooth grayscale image"""
    return image_dataset(smooth_image(side=8, seed=3), side=8, name="smooth")


@pytest.fixture
def toy_qiren_config():
    """QIREN with two qubits, small enough for finite differences"""
    return ModelConfig.for_family(
        "qiren", d_in=1, d_out=1, hidden_dim=2, qubits=2, depth=2, reuploads=2, blocks=1, seed=5
    )


@pytest.fixture
def toy_configs():
    """One small config per family"""
    return {
        "qiren": ModelConfig.for_family("qiren", 1, hidden_dim=2, qubits=2, depth=1, reuploads=1,
                                        blocks=1, seed=1),
        "relu": ModelConfig.for_family("relu", 1, hidden_dim=4, depth=2, seed=1),
        "tanh": ModelConfig.for_family("tanh", 1, hidden_dim=4, depth=2, seed=1),
        "relu_rff": ModelConfig.for_family("relu_rff", 1, hidden_dim=4, depth=2, rff_features=2,
                                           rff_sigma=1.0, seed=1),
        "siren": ModelConfig.for_family("siren", 1, hidden_dim=4, depth=2, omega0=3.0, seed=1),
        "pure_quantum": ModelConfig.for_family("pure_quantum", 1, qubits=2, reuploads=2, seed=1),
    }
