"""
Named parameter containers and the parameter checkpoint format.
"""
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Iterator, Mapping, Optional, Tuple, Union

import torch
from torch import nn

from .errors import DataFormatError

CHECKPOINT_FORMAT = "traffic-forecaster-parameters"
CHECKPOINT_VERSION = 1


class ParameterSet:
    """
    Ordered mapping of stable parameter names to dense tensors.

    Names and shapes are fixed at construction. Flattening concatenates the
    tensors in name order (row-major), and ``unflatten`` inverts it exactly.
    """

    def __init__(self, tensors: Mapping[str, torch.Tensor]):
        self._tensors: "OrderedDict[str, torch.Tensor]" = OrderedDict(tensors)
        self._shapes: Dict[str, Tuple[int, ...]] = {
            name: tuple(t.shape) for name, t in self._tensors.items()
        }

    @classmethod
    def from_module(cls, module: nn.Module, detach: bool = True) -> 'ParameterSet':
        """Snapshot the named parameters of a module (buffers excluded)."""
        tensors = OrderedDict()
        for name, param in module.named_parameters():
            tensors[name] = param.detach().clone() if detach else param
        return cls(tensors)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(self._tensors)

    @property
    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return dict(self._shapes)

    def numel(self) -> int:
        return sum(t.numel() for t in self._tensors.values())

    def as_dict(self) -> Dict[str, torch.Tensor]:
        return dict(self._tensors)

    def flatten(self) -> torch.Tensor:
        """Concatenate all parameters into one 1-D tensor."""
        if not self._tensors:
            return torch.zeros(0, dtype=torch.float64)
        return torch.cat([t.reshape(-1) for t in self._tensors.values()])

    def unflatten(self, vector: torch.Tensor) -> 'ParameterSet':
        """Build a ParameterSet with this one's names and shapes from a flat vector."""
        if vector.numel() != self.numel():
            raise ValueError(f"Expected {self.numel()} values, got {vector.numel()}")
        tensors = OrderedDict()
        offset = 0
        for name, shape in self._shapes.items():
            size = self._tensors[name].numel()
            tensors[name] = vector[offset:offset + size].reshape(shape)
            offset += size
        return ParameterSet(tensors)

    def requiring_grad(self) -> 'ParameterSet':
        """Detached copies that are leaves of a fresh autograd graph."""
        return ParameterSet(OrderedDict(
            (name, t.detach().clone().requires_grad_(True))
            for name, t in self._tensors.items()
        ))

    def is_finite(self) -> bool:
        return all(bool(torch.isfinite(t).all()) for t in self._tensors.values())

    def load_into(self, module: nn.Module):
        """Copy these values into the module's parameters in place."""
        own = dict(module.named_parameters())
        missing = set(own) ^ set(self._tensors)
        if missing:
            raise ValueError(f"Parameter names do not match the module: {sorted(missing)}")
        with torch.no_grad():
            for name, tensor in self._tensors.items():
                own[name].copy_(tensor)

    def __getitem__(self, name: str) -> torch.Tensor:
        return self._tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def __repr__(self) -> str:
        return f"ParameterSet({len(self)} tensors, {self.numel()} values)"


class GradientRecord(ParameterSet):
    """Per-parameter gradients, shape-congruent with a ParameterSet."""

    @classmethod
    def matching(cls, params: ParameterSet, grads: Mapping[str, Optional[torch.Tensor]]) -> 'GradientRecord':
        """Assemble a record, substituting zeros for parameters autograd never reached."""
        tensors = OrderedDict()
        for name in params.names:
            grad = grads.get(name)
            tensors[name] = torch.zeros_like(params[name]) if grad is None else grad.detach()
        return cls(tensors)

    def is_congruent(self, params: ParameterSet) -> bool:
        return self.shapes == params.shapes and self.names == params.names

    def global_norm(self) -> float:
        return float(self.flatten().norm())


def save_parameters(
    path: Union[str, Path],
    state: Mapping[str, torch.Tensor],
    metadata: Optional[dict] = None,
):
    """
    Write a versioned parameter file.

    Args:
        path: Destination file
        state: Name to tensor mapping (parameters and buffers)
        metadata: Extra plain-data entries stored next to the tensors
    """
    payload = {
        'format': CHECKPOINT_FORMAT,
        'version': CHECKPOINT_VERSION,
        'shapes': {name: list(t.shape) for name, t in state.items()},
        'tensors': OrderedDict((name, t.detach().cpu().contiguous()) for name, t in state.items()),
        'metadata': dict(metadata or {}),
    }
    torch.save(payload, str(path))


def load_parameters(path: Union[str, Path]) -> Tuple["OrderedDict[str, torch.Tensor]", dict]:
    """
    Read a file written by ``save_parameters``.

    Returns:
        (tensors, metadata)

    Raises:
        DataFormatError: If the header is missing, of another format, or of
            an unsupported version, or if a tensor disagrees with its shape
    """
    payload = torch.load(str(path), map_location='cpu', weights_only=True)
    if not isinstance(payload, dict) or payload.get('format') != CHECKPOINT_FORMAT:
        raise DataFormatError(f"{path} is not a parameter checkpoint")
    if payload.get('version') != CHECKPOINT_VERSION:
        raise DataFormatError(
            f"{path} has checkpoint version {payload.get('version')}, expected {CHECKPOINT_VERSION}"
        )
    tensors = payload['tensors']
    for name, shape in payload['shapes'].items():
        if list(tensors[name].shape) != list(shape):
            raise DataFormatError(f"{path}: tensor {name} has shape {list(tensors[name].shape)}, header says {shape}")
    return tensors, payload.get('metadata', {})
