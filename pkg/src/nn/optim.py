"""
MSE loss, Adam optimizer and the backprop entry point for LayerStack models.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from src.config import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPSILON,
    LR_CLASSICAL,
    LR_QUANTUM,
    get_logger,
)
from src.nn.layers import (
    CLASSICAL,
    QUANTUM,
    LayerStack,
    NonFiniteGradientError,
    ShapeMismatchError,
)

logger = get_logger(__name__)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean squared error and its gradient with respect to `pred`.

    Raises:
        ShapeMismatchError: If shapes differ or the dataset is empty
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeMismatchError(f"Prediction shape {pred.shape} != target shape {target.shape}")
    if pred.size == 0:
        raise ShapeMismatchError("MSE needs at least one sample")
    diff = pred - target
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size


@dataclass
class AdamState:
    """Adam hyperparameters and moment accumulators for one parameter group."""
    lr: float
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def to_dict(self) -> Dict[str, object]:
        return {
            "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2,
            "epsilon": self.epsilon, "step": self.step,
        }


def adam_step(state: AdamState, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    """Bias-corrected Adam update, applied in place; returns `params`.

    Raises:
        NonFiniteGradientError: If any gradient contains NaN or inf
        ShapeMismatchError: If a gradient shape differs from its parameter
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(f"Non-finite gradient for parameter '{name}'", name)
        if g.shape != params[name].shape:
            raise ShapeMismatchError(f"Gradient shape {g.shape} != parameter shape {params[name].shape} for '{name}'")

    state.step += 1
    t = state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        m = state.m.get(name, np.zeros_like(p))
        v = state.v.get(name, np.zeros_like(p))
        m = state.beta1 * m + (1 - state.beta1) * g
        v = state.beta2 * v + (1 - state.beta2) * g ** 2
        state.m[name], state.v[name] = m, v
        m_hat = m / (1 - state.beta1 ** t)
        v_hat = v / (1 - state.beta2 ** t)
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params


class Adam:
    """Adam over a LayerStack with separate learning rates for classical and quantum parameters."""

    def __init__(self, stack: LayerStack, lr: Optional[float] = None,
                 lr_classical: float = LR_CLASSICAL, lr_quantum: float = LR_QUANTUM):
        self.stack = stack
        self.groups = stack.param_groups()
        self.states = {
            CLASSICAL: AdamState(lr=lr if lr is not None else lr_classical),
            QUANTUM: AdamState(lr=lr if lr is not None else lr_quantum),
        }

    def step(self, grads: Dict[str, np.ndarray]) -> None:
        params = self.stack.named_parameters()
        for group, state in self.states.items():
            names = [n for n, g in self.groups.items() if g == group]
            if names:
                adam_step(state, {n: params[n] for n in names}, {n: grads[n] for n in names if n in grads})

    def to_dict(self) -> Dict[str, object]:
        return {group: state.to_dict() for group, state in self.states.items()}


def backprop(stack: LayerStack, batch: np.ndarray, targets: np.ndarray) -> Tuple[float, Dict[str, np.ndarray]]:
    """Forward, MSE loss and reverse sweep; returns (loss, named gradients)."""
    stack.zero_grad()
    pred = stack.forward(batch)
    loss, grad = mse_loss(pred, targets)
    stack.backward(grad)
    return loss, stack.named_gradients()
