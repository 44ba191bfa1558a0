"""
Classical differentiable layers, the quantum circuit layer and the sequential
LayerStack that chains them into one trainable model.

Every layer caches what it needs during `forward` and implements `backward`,
which accumulates parameter gradients and returns the gradient with respect to
the layer input. Inputs are batches shaped (batch, features).
"""
from __future__ import annotations

from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config import (
    BATCHNORM_EPSILON,
    BATCHNORM_MOMENTUM,
    RFF_SIGMA,
    SIREN_OMEGA0,
    get_logger,
)
from src.quantum.reuploading import (
    CircuitParams,
    CircuitSpec,
    circuit_forward_batch,
    circuit_vjp,
    sample_noise,
)

if TYPE_CHECKING:
    from src.models import ModelConfig

logger = get_logger(__name__)

CLASSICAL = "classical"
QUANTUM = "quantum"


class NeuralError(Exception):
    """Base exception for layer and training errors."""
    pass


class ShapeMismatchError(NeuralError):
    """Raised when a layer receives an input of the wrong shape."""

    def __init__(self, message: str, layer_index: Optional[int] = None):
        self.layer_index = layer_index
        prefix = f"layer {layer_index}: " if layer_index is not None else ""
        super().__init__(prefix + message)


class NonFiniteGradientError(NeuralError):
    """Raised when a gradient contains NaN or infinite values."""

    def __init__(self, message: str, parameter: Optional[str] = None):
        self.parameter = parameter
        super().__init__(message)


class BatchSizeError(NeuralError):
    """Raised when BatchNorm gets fewer than two rows in train mode."""
    pass


class Layer:
    """Base class: a differentiable map of (batch, in) to (batch, out)."""

    param_group = CLASSICAL

    def __init__(self):
        self.training = True
        self._grads: Dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def parameters(self) -> Dict[str, np.ndarray]:
        """Named trainable arrays (references, updated in place by the optimizer)."""
        return {}

    def gradients(self) -> Dict[str, np.ndarray]:
        return self._grads

    def buffers(self) -> Dict[str, np.ndarray]:
        """Non-trainable state that must survive a checkpoint."""
        return {}

    def zero_grad(self) -> None:
        self._grads = {name: np.zeros_like(p) for name, p in self.parameters().items()}

    def train(self) -> None:
        self.training = True

    def eval(self) -> None:
        self.training = False

    @property
    def num_params(self) -> int:
        return int(sum(p.size for p in self.parameters().values()))

    def _accumulate(self, name: str, grad: np.ndarray) -> None:
        if name in self._grads:
            self._grads[name] = self._grads[name] + grad
        else:
            self._grads[name] = grad

    def __repr__(self) -> str:
        return self.__class__.__name__


def _check_width(x: np.ndarray, width: int, layer: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != width:
        raise ShapeMismatchError(f"{layer} expects (batch, {width}) input, got {x.shape}")
    return x


class LinearLayer(Layer):
    """y = W x + b with weight (out, in) and bias (out,)."""

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        super().__init__()
        self.weight = np.asarray(weight, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeMismatchError(
                f"Inconsistent Linear shapes: weight {self.weight.shape}, bias {self.bias.shape}"
            )
        self._input: Optional[np.ndarray] = None

    @classmethod
    def initialize(
        cls,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        scheme: str = "default",
        omega0: float = SIREN_OMEGA0,
    ) -> "LinearLayer":
        """Create a layer with one of the supported initializations.

        Args:
            scheme: "default" (uniform +-1/sqrt(in)), "siren_first"
                (uniform +-1/in) or "siren_hidden" (uniform +-sqrt(6/in)/omega0)
        """
        if scheme == "siren_first":
            bound = 1.0 / in_features
        elif scheme == "siren_hidden":
            bound = np.sqrt(6.0 / in_features) / omega0
        elif scheme == "default":
            bound = 1.0 / np.sqrt(in_features)
        else:
            raise NeuralError(f"Unknown initialization scheme: {scheme}")
        weight = rng.uniform(-bound, bound, size=(out_features, in_features))
        bias_bound = 1.0 / np.sqrt(in_features)
        bias = rng.uniform(-bias_bound, bias_bound, size=out_features)
        return cls(weight, bias)

    @property
    def in_features(self) -> int:
        return self.weight.shape[1]

    @property
    def out_features(self) -> int:
        return self.weight.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = _check_width(x, self.in_features, "Linear")
        self._input = x
        return x @ self.weight.T + self.bias

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        self._accumulate("weight", grad_out.T @ self._input)
        self._accumulate("bias", grad_out.sum(axis=0))
        return grad_out @ self.weight

    def parameters(self) -> Dict[str, np.ndarray]:
        return {"weight": self.weight, "bias": self.bias}

    def __repr__(self) -> str:
        return f"Linear({self.in_features} -> {self.out_features})"


def linear_forward(layer: LinearLayer, x: Sequence[float]) -> np.ndarray:
    """Wx + b for a single input vector."""
    return layer.forward(np.asarray(x, dtype=np.float64)[None, :])[0]


class BatchNormLayer(Layer):
    """Per-feature batch normalization with running statistics for eval mode."""

    def __init__(
        self,
        dim: int,
        momentum: float = BATCHNORM_MOMENTUM,
        epsilon: float = BATCHNORM_EPSILON,
    ):
        super().__init__()
        self.dim = dim
        self.momentum = momentum
        self.epsilon = epsilon
        self.gamma = np.ones(dim)
        self.beta = np.zeros(dim)
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self._cache: Tuple[np.ndarray, np.ndarray] | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = _check_width(x, self.dim, "BatchNorm")
        if self.training:
            if x.shape[0] < 2:
                raise BatchSizeError(f"BatchNorm needs batch size >= 2 in train mode, got {x.shape[0]}")
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            unbiased = var * x.shape[0] / (x.shape[0] - 1)
            self.running_mean = (1 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var = (1 - self.momentum) * self.running_var + self.momentum * unbiased
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        x_hat = (x - mean) * inv_std
        self._cache = (x_hat, inv_std)
        return self.gamma * x_hat + self.beta

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        x_hat, inv_std = self._cache
        self._accumulate("gamma", (grad_out * x_hat).sum(axis=0))
        self._accumulate("beta", grad_out.sum(axis=0))
        g_hat = grad_out * self.gamma
        if not self.training:
            return g_hat * inv_std
        n = grad_out.shape[0]
        return inv_std / n * (n * g_hat - g_hat.sum(axis=0) - x_hat * (g_hat * x_hat).sum(axis=0))

    def parameters(self) -> Dict[str, np.ndarray]:
        return {"gamma": self.gamma, "beta": self.beta}

    def buffers(self) -> Dict[str, np.ndarray]:
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def __repr__(self) -> str:
        return f"BatchNorm({self.dim})"


def batchnorm_forward(layer: BatchNormLayer, batch: np.ndarray) -> np.ndarray:
    return layer.forward(batch)


class ReLU(Layer):
    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad_out):
        return grad_out * self._mask


class Tanh(Layer):
    def forward(self, x):
        self._out = np.tanh(x)
        return self._out

    def backward(self, grad_out):
        return grad_out * (1.0 - self._out ** 2)


class Sine(Layer):
    """sin(omega0 * x)."""

    def __init__(self, omega0: float = SIREN_OMEGA0):
        super().__init__()
        self.omega0 = omega0

    def forward(self, x):
        self._input = x
        return np.sin(self.omega0 * x)

    def backward(self, grad_out):
        return grad_out * self.omega0 * np.cos(self.omega0 * self._input)

    def __repr__(self) -> str:
        return f"Sine(omega0={self.omega0:g})"


class RFFLayer(Layer):
    """Fixed random Fourier features: concat(cos(2 pi M x), sin(2 pi M x))."""

    def __init__(self, mapping: np.ndarray, sigma: float = RFF_SIGMA):
        super().__init__()
        self.mapping = np.asarray(mapping, dtype=np.float64)
        self.mapping.setflags(write=False)
        self.sigma = sigma

    @classmethod
    def initialize(cls, in_features: int, num_features: int, rng: np.random.Generator,
                   sigma: float = RFF_SIGMA) -> "RFFLayer":
        """M ~ Normal(0, sigma^2), drawn once."""
        return cls(rng.normal(0.0, sigma, size=(num_features, in_features)), sigma)

    @property
    def in_features(self) -> int:
        return self.mapping.shape[1]

    @property
    def out_features(self) -> int:
        return 2 * self.mapping.shape[0]

    def forward(self, x):
        x = _check_width(x, self.in_features, "RFF")
        self._z = 2 * np.pi * x @ self.mapping.T
        return np.concatenate([np.cos(self._z), np.sin(self._z)], axis=1)

    def backward(self, grad_out):
        m = self.mapping.shape[0]
        g_cos, g_sin = grad_out[:, :m], grad_out[:, m:]
        dz = -g_cos * np.sin(self._z) + g_sin * np.cos(self._z)
        return dz @ (2 * np.pi * self.mapping)

    def buffers(self) -> Dict[str, np.ndarray]:
        return {"mapping": self.mapping}

    def __repr__(self) -> str:
        return f"RFF({self.in_features} -> {self.out_features}, sigma={self.sigma:g})"


def rff_forward(layer: RFFLayer, x: Sequence[float]) -> np.ndarray:
    return layer.forward(np.asarray(x, dtype=np.float64)[None, :])[0]


class ReplicateLayer(Layer):
    """Copies input feature q % in_features to output q; no parameters."""

    def __init__(self, in_features: int, out_features: int):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.index = np.arange(out_features) % in_features

    def forward(self, x):
        x = _check_width(x, self.in_features, "Replicate")
        return x[:, self.index]

    def backward(self, grad_out):
        grad = np.zeros((grad_out.shape[0], self.in_features))
        np.add.at(grad, (slice(None), self.index), grad_out)
        return grad

    def __repr__(self) -> str:
        return f"Replicate({self.in_features} -> {self.out_features})"


class QuantumLayer(Layer):
    """Data re-uploading circuit as a layer of width d_h -> d_f.

    Under measurement noise each forward pass draws a fresh noise realization;
    the backward pass differentiates that realization.
    """

    param_group = QUANTUM

    def __init__(self, spec: CircuitSpec, params: CircuitParams, rng: Optional[np.random.Generator] = None):
        super().__init__()
        params.validate(spec)
        self.spec = spec
        self.params = params
        self.rng = rng
        self._input: Optional[np.ndarray] = None
        self._noise: Optional[np.ndarray] = None

    @property
    def in_features(self) -> int:
        return self.spec.num_qubits

    @property
    def out_features(self) -> int:
        return self.spec.num_outputs

    def forward(self, x):
        x = _check_width(x, self.in_features, "QuantumCircuit")
        self._input = x
        self._noise = sample_noise(self.spec, x.shape[0], self.rng)
        return circuit_forward_batch(self.spec, self.params, x, noise=self._noise)

    def backward(self, grad_out):
        grad_params, grad_in = circuit_vjp(self.spec, self.params, self._input, grad_out, self._noise)
        self._accumulate("angles", grad_params)
        return grad_in

    def parameters(self) -> Dict[str, np.ndarray]:
        return {"angles": self.params.angles}

    def __repr__(self) -> str:
        s = self.spec
        return (f"QuantumCircuit(qubits={s.wires}, L={s.reuploads}, K={s.blocks}, "
                f"{s.entangler.value}, noise={s.noise_bound:g})")


class LayerStack:
    """Ordered sequence of layers trained end to end."""

    def __init__(self, layers: List[Layer], config: Optional["ModelConfig"] = None):
        self.layers = list(layers)
        self.config = config

    def forward(self, x: np.ndarray) -> np.ndarray:
        out = np.asarray(x, dtype=np.float64)
        for i, layer in enumerate(self.layers):
            try:
                out = layer.forward(out)
            except ShapeMismatchError as e:
                raise ShapeMismatchError(str(e), layer_index=i) from e
        return out

    __call__ = forward

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        grad = grad_out
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def zero_grad(self) -> None:
        for layer in self.layers:
            layer.zero_grad()

    def train(self) -> None:
        for layer in self.layers:
            layer.train()

    def eval(self) -> None:
        for layer in self.layers:
            layer.eval()

    def named_parameters(self) -> Dict[str, np.ndarray]:
        return {
            f"{i}.{name}": p
            for i, layer in enumerate(self.layers)
            for name, p in layer.parameters().items()
        }

    def named_gradients(self) -> Dict[str, np.ndarray]:
        return {
            f"{i}.{name}": g
            for i, layer in enumerate(self.layers)
            for name, g in layer.gradients().items()
        }

    def param_groups(self) -> Dict[str, str]:
        """Parameter name -> group ("classical" or "quantum")."""
        return {
            f"{i}.{name}": layer.param_group
            for i, layer in enumerate(self.layers)
            for name in layer.parameters()
        }

    def named_buffers(self) -> Dict[str, np.ndarray]:
        return {
            f"{i}.{name}": b
            for i, layer in enumerate(self.layers)
            for name, b in layer.buffers().items()
        }

    def load_buffers(self, buffers: Dict[str, np.ndarray]) -> None:
        for key, value in buffers.items():
            index, name = key.split(".", 1)
            array = np.array(value, dtype=np.float64)
            layer = self.layers[int(index)]
            if isinstance(layer, RFFLayer):
                array.setflags(write=False)
            setattr(layer, name, array)

    @property
    def num_params(self) -> int:
        return sum(layer.num_params for layer in self.layers)

    def __repr__(self) -> str:
        return " -> ".join(repr(layer) for layer in self.layers)

