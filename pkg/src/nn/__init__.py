# Neural network package
from .layers import (
    LinearLayer,
    BatchNormLayer,
    RFFLayer,
    QuantumLayer,
    ReLU,
    Tanh,
    Sine,
    LayerStack,
)
from .optim import Adam, AdamState, adam_step, mse_loss, backprop

__all__ = [
    "LinearLayer",
    "BatchNormLayer",
    "RFFLayer",
    "QuantumLayer",
    "ReLU",
    "Tanh",
    "Sine",
    "LayerStack",
    "Adam",
    "AdamState",
    "adam_step",
    "mse_loss",
    "backprop",
]
