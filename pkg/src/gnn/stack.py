"""
Stacked graph layers: the "GNN" that replaces a linear map inside a GRU gate.
"""
from typing import List, Optional

import torch
from torch import nn

from ..core.activations import DEFAULT_LEAKY_SLOPE, leaky_relu
from .layers import GnnKind, GnnLayerConfig, GraphBatch, HeadCombination, make_layer


def stack_configs(
    kind: GnnKind,
    in_width: int,
    out_width: int,
    layers: int = 2,
    hidden: Optional[int] = None,
    heads: int = 1,
    leaky_slope: float = DEFAULT_LEAKY_SLOPE,
) -> List[GnnLayerConfig]:
    """
    Layer configs for a stack: hidden layers concatenate heads, the final
    layer averages them so the stack output is exactly ``out_width`` wide.
    """
    if layers < 1:
        raise ValueError(f"A graph stack needs at least one layer, got {layers}")
    hidden = out_width if hidden is None else hidden
    configs = []
    width = in_width
    for index in range(layers):
        final = index == layers - 1
        config = GnnLayerConfig(
            kind=kind,
            in_width=width,
            out_width=out_width if final else hidden,
            heads=heads,
            combine=HeadCombination.AVERAGE if final else HeadCombination.CONCATENATE,
            leaky_slope=leaky_slope,
        )
        configs.append(config)
        width = config.output_width
    return configs


class GnnStack(nn.Module):
    """Graph layers with leaky_relu between them (none after the last)."""

    def __init__(self, configs: List[GnnLayerConfig]):
        super().__init__()
        self.configs = list(configs)
        self.layers = nn.ModuleList(make_layer(c) for c in self.configs)

    @classmethod
    def build(cls, kind: GnnKind, in_width: int, out_width: int, **kwargs) -> 'GnnStack':
        return cls(stack_configs(kind, in_width, out_width, **kwargs))

    @property
    def out_width(self) -> int:
        return self.configs[-1].output_width

    def forward(self, h: torch.Tensor, edges: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
        for index, (layer, config) in enumerate(zip(self.layers, self.configs)):
            h = layer(GraphBatch(h, edges, weights))
            if index < len(self.layers) - 1:
                h = leaky_relu(h, config.leaky_slope)
        return h
