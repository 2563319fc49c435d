"""
Graph-GRU encoder over the observed history of a scene batch.
"""
from dataclasses import dataclass
from typing import List, Tuple

import torch
from torch import nn

from ..gnn import GnnKind
from .gru import GraphGRUCell


@dataclass
class EncoderMemory:
    """
    Hidden state of every agent at every history slot.

    Slots where an agent was not observed hold h_init.
    """
    states: torch.Tensor  # (N, H, d_h)
    mask: torch.Tensor  # (N, H) bool

    @property
    def slots(self) -> int:
        return self.states.shape[1]


def no_edges(edges: torch.Tensor, weights: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    return edges[:, :0], weights[:0]


class GraphEncoder(nn.Module):
    """Runs a graph-GRU cell over the history graphs, one step at a time."""

    def __init__(
        self,
        feature_width: int,
        hidden_width: int,
        kind: GnnKind = GnnKind.GATPLUS,
        use_graph: bool = True,
        **stack_options,
    ):
        super().__init__()
        self.use_graph = use_graph
        self.hidden_width = hidden_width
        self.h_init = nn.Parameter(torch.zeros(hidden_width))
        self.cell = GraphGRUCell(feature_width, hidden_width, kind, **stack_options)

    def forward(
        self,
        features: torch.Tensor,
        mask: torch.Tensor,
        edges: List[torch.Tensor],
        weights: List[torch.Tensor],
    ) -> Tuple[EncoderMemory, torch.Tensor]:
        """
        Encode a batch history.

        Args:
            features: (N, H, d_f) node plus context features
            mask: (N, H) observation mask
            edges: Per step (2, E_i) undirected edges among observed agents
            weights: Per step (E_i,) kernel weights

        Returns:
            (memory, final hidden state (N, d_h))
        """
        n, steps, _ = features.shape
        initial = self.h_init.expand(n, self.hidden_width)
        h = initial
        slots = []
        for step in range(steps):
            step_edges, step_weights = edges[step], weights[step]
            if not self.use_graph:
                step_edges, step_weights = no_edges(step_edges, step_weights)
            candidate = self.cell(features[:, step], h, step_edges, step_weights)
            observed = mask[:, step, None]
            h = torch.where(observed, candidate, h)
            slots.append(torch.where(observed, h, initial))
        return EncoderMemory(torch.stack(slots, dim=1), mask), h


def encode(
    encoder: GraphEncoder,
    features: torch.Tensor,
    mask: torch.Tensor,
    edges: List[torch.Tensor],
    weights: List[torch.Tensor],
) -> Tuple[EncoderMemory, torch.Tensor]:
    return encoder(features, mask, edges, weights)
