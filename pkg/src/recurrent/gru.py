"""
GRU update and its graph variant, where both input maps are graph stacks.
"""
from typing import Optional

import torch
from torch import nn

from ..core.activations import sigmoid, tanh
from ..gnn import GnnKind, GnnStack


def gru_cell(
    f_input: torch.Tensor,
    h_input: torch.Tensor,
    h_prev: torch.Tensor,
    b_r: Optional[torch.Tensor] = None,
    b_z: Optional[torch.Tensor] = None,
    b_h: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """
    One GRU update from precomputed intermediates.

    Args:
        f_input: (N, 3*d_h) input-side intermediates, ordered reset | update | candidate
        h_input: (N, 3*d_h) hidden-side intermediates, same order
        h_prev: (N, d_h) previous hidden state
        b_r, b_z, b_h: Optional (d_h,) gate biases

    Returns:
        (N, d_h) new hidden state (1 - z) * candidate + z * h_prev
    """
    width = h_prev.shape[-1]
    if f_input.shape[-1] != 3 * width or h_input.shape[-1] != 3 * width:
        raise ValueError(
            f"Intermediates must be 3*{width} wide, got {f_input.shape[-1]} and {h_input.shape[-1]}"
        )
    f_r, f_z, f_h = f_input.split(width, dim=-1)
    h_r, h_z, h_h = h_input.split(width, dim=-1)
    zero = h_prev.new_zeros(width)
    b_r = zero if b_r is None else b_r
    b_z = zero if b_z is None else b_z
    b_h = zero if b_h is None else b_h

    r = sigmoid(f_r + h_r + b_r)
    z = sigmoid(f_z + h_z + b_z)
    candidate = tanh(f_h + r * h_h + b_h)
    return (1.0 - z) * candidate + z * h_prev


class GraphGRUCell(nn.Module):
    """GRU cell whose input and hidden maps are graph stacks over the same graph."""

    def __init__(
        self,
        in_width: int,
        hidden_width: int,
        kind: GnnKind = GnnKind.GATPLUS,
        **stack_options,
    ):
        super().__init__()
        self.hidden_width = hidden_width
        self.gnn_f = GnnStack.build(kind, in_width, 3 * hidden_width, **stack_options)
        self.gnn_h = GnnStack.build(kind, hidden_width, 3 * hidden_width, **stack_options)
        self.b_r = nn.Parameter(torch.zeros(hidden_width))
        self.b_z = nn.Parameter(torch.zeros(hidden_width))
        self.b_h = nn.Parameter(torch.zeros(hidden_width))

    def forward(
        self,
        x: torch.Tensor,
        h_prev: torch.Tensor,
        edges: torch.Tensor,
        weights: torch.Tensor,
    ) -> torch.Tensor:
        f_input = self.gnn_f(x, edges, weights)
        h_input = self.gnn_h(h_prev, edges, weights)
        return gru_cell(f_input, h_input, h_prev, self.b_r, self.b_z, self.b_h)
