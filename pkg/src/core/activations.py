"""
Activation and pointwise loss primitives.

Every function here is differentiable through torch autograd and is listed
in ``PRIMITIVES`` so the gradient checks can sweep all of them.
"""
from typing import Callable, Dict

import torch
import torch.nn.functional as F

DEFAULT_LEAKY_SLOPE = 0.01
DEFAULT_HUBER_DELTA = 1.0


def sigmoid(x: torch.Tensor) -> torch.Tensor:
    return torch.sigmoid(x)


def tanh(x: torch.Tensor) -> torch.Tensor:
    return torch.tanh(x)


def leaky_relu(x: torch.Tensor, slope: float = DEFAULT_LEAKY_SLOPE) -> torch.Tensor:
    return F.leaky_relu(x, negative_slope=slope)


def softplus(x: torch.Tensor) -> torch.Tensor:
    """Smooth positive map, ln(1 + e^x)."""
    return F.softplus(x)


def softsign(x: torch.Tensor) -> torch.Tensor:
    """x / (1 + |x|), always inside (-1, 1)."""
    return F.softsign(x)


def elu(x: torch.Tensor) -> torch.Tensor:
    return F.elu(x)


def softmax(x: torch.Tensor, dim: int = -1) -> torch.Tensor:
    return torch.softmax(x, dim=dim)


def huber(error: torch.Tensor, delta: float = DEFAULT_HUBER_DELTA) -> torch.Tensor:
    """
    Elementwise Huber loss of an error (prediction minus target).

    Quadratic 0.5*e^2 for |e| <= delta, linear delta*(|e| - 0.5*delta) beyond.
    """
    return F.huber_loss(error, torch.zeros_like(error), reduction='none', delta=delta)


PRIMITIVES: Dict[str, Callable[[torch.Tensor], torch.Tensor]] = {
    'sigmoid': sigmoid,
    'tanh': tanh,
    'leaky_relu': leaky_relu,
    'softplus': softplus,
    'softsign': softsign,
    'elu': elu,
    'softmax': softmax,
    'huber': huber,
}
