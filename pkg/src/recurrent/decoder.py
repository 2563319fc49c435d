"""
Graph-GRU decoder with temporal attention over the encoder memory.

Per horizon step and mixture component the decoder emits a two-dimensional
motion input u and three raw process-noise parameters. The mixture logits
come from the final encoder hidden state and stay constant over the horizon.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Tuple

import torch
from torch import nn

from ..core.activations import DEFAULT_LEAKY_SLOPE, leaky_relu, softmax
from ..core.errors import ConfigurationError
from ..gnn import GnnKind
from .encoder import EncoderMemory, no_edges
from .gru import GraphGRUCell

INPUT_DIM = 2
NOISE_DIM = 3

# (step index, component states (N, M, d_s), u (N, M, 2)) -> next states
Transition = Callable[[int, torch.Tensor, torch.Tensor], torch.Tensor]


class DecodeMode(Enum):
    TEACHER_FORCING = "teacher_forcing"
    ROLLOUT = "rollout"


@dataclass
class DecoderOutput:
    """Raw decoder heads for every agent, horizon step and component."""
    u: torch.Tensor  # (N, t_f, M, 2)
    noise: torch.Tensor  # (N, t_f, M, 3) rho_raw, s1_raw, s2_raw
    logits: torch.Tensor  # (N, M)
    attention: torch.Tensor  # (N, t_f, H)
    states: Optional[torch.Tensor] = None  # (N, t_f, M, d_s), rollout only

    @property
    def weights(self) -> torch.Tensor:
        return softmax(self.logits, dim=-1)


class TemporalAttention(nn.Module):
    """Scores the memory slots from the previous decoder state and the state embedding."""

    def __init__(self, hidden_width: int, embed_width: int, slots: int):
        super().__init__()
        self.W_x = nn.Linear(embed_width, hidden_width)
        self.W_alpha = nn.Linear(2 * hidden_width, slots)

    def embed(self, prev_states: torch.Tensor) -> torch.Tensor:
        return self.W_x(prev_states)

    def forward(
        self,
        h_prev: torch.Tensor,
        prev_states: torch.Tensor,
        memory: EncoderMemory,
    ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """
        Returns:
            (context (N, d_h), attention (N, H), state embedding (N, d_h))
        """
        embedding = self.embed(prev_states)
        logits = self.W_alpha(torch.cat([h_prev, embedding], dim=-1))
        logits = logits.masked_fill(~memory.mask, float('-inf'))
        alpha = softmax(logits, dim=-1)
        context = torch.einsum('nl,nld->nd', alpha, memory.states)
        return context, alpha, embedding


def temporal_attention(
    h_prev: torch.Tensor,
    prev_states: torch.Tensor,
    memory: EncoderMemory,
    attention: TemporalAttention,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """(context vector, attention weights) for one decoder step."""
    context, alpha, _ = attention(h_prev, prev_states, memory)
    return context, alpha


class GraphDecoder(nn.Module):
    """Decodes t_f steps on the last known graph."""

    def __init__(
        self,
        hidden_width: int,
        state_width: int,
        components: int,
        slots: int,
        kind: GnnKind = GnnKind.GATPLUS,
        use_graph: bool = True,
        **stack_options,
    ):
        super().__init__()
        self.hidden_width = hidden_width
        self.state_width = state_width
        self.components = components
        self.use_graph = use_graph
        self.leaky_slope = stack_options.get('leaky_slope', DEFAULT_LEAKY_SLOPE)
        self.attention = TemporalAttention(hidden_width, components * state_width, slots)
        self.W_fhat = nn.Linear(2 * hidden_width, hidden_width)
        self.cell = GraphGRUCell(hidden_width, hidden_width, kind, **stack_options)
        self.head = nn.Linear(hidden_width, components * (INPUT_DIM + NOISE_DIM))
        self.pi_head = nn.Linear(hidden_width, components)
        self.register_buffer('state_mean', torch.zeros(state_width))
        self.register_buffer('state_std', torch.ones(state_width))

    def _embedding_input(self, states: torch.Tensor) -> torch.Tensor:
        """(N, M, d_s) component states -> (N, M*d_s) standardised embedding input."""
        scaled = (states - self.state_mean) / self.state_std
        return scaled.reshape(states.shape[0], -1)

    def forward(
        self,
        memory: EncoderMemory,
        final_hidden: torch.Tensor,
        edges: torch.Tensor,
        weights: torch.Tensor,
        initial_state: torch.Tensor,
        horizon: int,
        mode: DecodeMode = DecodeMode.TEACHER_FORCING,
        truth: Optional[torch.Tensor] = None,
        transition: Optional[Transition] = None,
    ) -> DecoderOutput:
        """
        Decode the horizon.

        Args:
            memory: Encoder memory
            final_hidden: (N, d_h) last encoder hidden state
            edges, weights: Graph at the prediction instant
            initial_state: (N, d_s) last observed motion state
            horizon: t_f
            mode: Teacher forcing feeds ``truth`` back, rollout feeds the
                states produced by ``transition``
            truth: (N, t_f, d_s) ground-truth states, teacher forcing only
            transition: Motion callback, rollout only

        Raises:
            ConfigurationError: If the mode's state source is missing
        """
        if horizon < 1:
            raise ValueError(f"Horizon must be at least 1, got {horizon}")
        if mode == DecodeMode.ROLLOUT and transition is None:
            raise ConfigurationError("Rollout decoding needs a motion-model transition")
        if mode == DecodeMode.TEACHER_FORCING and truth is None:
            raise ConfigurationError("Teacher forcing needs ground-truth states")
        if not self.use_graph:
            edges, weights = no_edges(edges, weights)

        n, m = final_hidden.shape[0], self.components
        states = initial_state[:, None, :].expand(n, m, self.state_width)
        h = final_hidden
        u_steps, noise_steps, attention_steps, rolled = [], [], [], []
        for step in range(horizon):
            context, alpha, embedding = self.attention(h, self._embedding_input(states), memory)
            f_hat = leaky_relu(self.W_fhat(torch.cat([context, embedding], dim=-1)), self.leaky_slope)
            h = self.cell(f_hat, h, edges, weights)
            out = self.head(h).reshape(n, m, INPUT_DIM + NOISE_DIM)
            u, noise = out[..., :INPUT_DIM], out[..., INPUT_DIM:]
            u_steps.append(u)
            noise_steps.append(noise)
            attention_steps.append(alpha)
            if mode == DecodeMode.ROLLOUT:
                states = transition(step, states, u)
                rolled.append(states)
            else:
                states = truth[:, step, None, :].expand(n, m, self.state_width)

        return DecoderOutput(
            u=torch.stack(u_steps, dim=1),
            noise=torch.stack(noise_steps, dim=1),
            logits=self.pi_head(final_hidden),
            attention=torch.stack(attention_steps, dim=1),
            states=torch.stack(rolled, dim=1) if rolled else None,
        )


def decode(
    decoder: GraphDecoder,
    memory: EncoderMemory,
    final_hidden: torch.Tensor,
    edges: torch.Tensor,
    weights: torch.Tensor,
    initial_state: torch.Tensor,
    horizon: int,
    mode: DecodeMode = DecodeMode.TEACHER_FORCING,
    truth: Optional[torch.Tensor] = None,
    transition: Optional[Transition] = None,
) -> DecoderOutput:
    return decoder(memory, final_hidden, edges, weights, initial_state, horizon, mode, truth, transition)
