"""
Graph layers used inside the graph-GRU gates.

All layers act on a GraphBatch: a node matrix plus an undirected edge list
with Gaussian-kernel weights. Messages travel both ways along every edge;
inclusive neighbourhoods add a self-loop of weight 1 internally.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import torch
from torch import nn

from ..core.activations import DEFAULT_LEAKY_SLOPE, leaky_relu


class GnnKind(Enum):
    """Available layer types."""
    GRAPHCONV = "graphconv"
    GCN = "gcn"
    GAT = "gat"
    GATPLUS = "gatplus"

    def __str__(self):
        return self.value

    @property
    def uses_attention(self) -> bool:
        return self in (GnnKind.GAT, GnnKind.GATPLUS)


class HeadCombination(Enum):
    """How attention heads are merged."""
    CONCATENATE = "concatenate"
    AVERAGE = "average"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class GnnLayerConfig:
    """Shape and type of one graph layer."""
    kind: GnnKind
    in_width: int
    out_width: int
    heads: int = 1
    combine: HeadCombination = HeadCombination.CONCATENATE
    leaky_slope: float = DEFAULT_LEAKY_SLOPE

    def __post_init__(self):
        if self.in_width <= 0 or self.out_width <= 0:
            raise ValueError(f"Layer widths must be positive, got {self.in_width} -> {self.out_width}")
        if self.heads < 1:
            raise ValueError(f"Head count must be at least 1, got {self.heads}")

    @property
    def output_width(self) -> int:
        """Width of the layer output after combining heads."""
        if self.kind.uses_attention and self.combine == HeadCombination.CONCATENATE:
            return self.out_width * self.heads
        return self.out_width


@dataclass
class GraphBatch:
    """Node representations with an undirected, self-loop-free edge list."""
    h: torch.Tensor  # (N, width)
    edges: torch.Tensor  # (2, E) long
    weights: torch.Tensor  # (E,)

    def __post_init__(self):
        if self.edges.shape[0] != 2:
            raise ValueError(f"Edges must have shape (2, E), got {tuple(self.edges.shape)}")
        if self.weights.shape != (self.edges.shape[1],):
            raise ValueError("Edge weights must match the edge list")

    @property
    def num_nodes(self) -> int:
        return self.h.shape[0]

    def directed(self) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """(source, target, weight) with both directions of every edge."""
        src = torch.cat([self.edges[0], self.edges[1]])
        dst = torch.cat([self.edges[1], self.edges[0]])
        return src, dst, torch.cat([self.weights, self.weights])

    def inclusive(self) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Directed edges plus a weight-1 self-loop per node."""
        src, dst, weight = self.directed()
        nodes = torch.arange(self.num_nodes, device=self.h.device)
        ones = torch.ones(self.num_nodes, dtype=self.weights.dtype, device=self.h.device)
        return torch.cat([src, nodes]), torch.cat([dst, nodes]), torch.cat([weight, ones])

    def without_edges(self) -> 'GraphBatch':
        empty = self.edges[:, :0]
        return GraphBatch(self.h, empty, self.weights[:0])


def scatter_sum(values: torch.Tensor, index: torch.Tensor, num_nodes: int) -> torch.Tensor:
    """Sum rows of ``values`` into ``num_nodes`` buckets."""
    out = values.new_zeros((num_nodes,) + tuple(values.shape[1:]))
    return out.index_add(0, index, values)


def segment_softmax(logits: torch.Tensor, index: torch.Tensor, num_nodes: int) -> torch.Tensor:
    """Softmax of edge logits grouped by target node."""
    expanded = index.view(-1, *([1] * (logits.dim() - 1))).expand_as(logits)
    maxes = logits.new_full((num_nodes,) + tuple(logits.shape[1:]), float('-inf'))
    maxes = maxes.scatter_reduce(0, expanded, logits, reduce='amax', include_self=True)
    # shifting by a per-group constant leaves the softmax unchanged
    exp = torch.exp(logits - maxes.detach()[index])
    return exp / scatter_sum(exp, index, num_nodes)[index]


def _linear(in_width: int, out_width: int) -> nn.Parameter:
    weight = torch.empty(out_width, in_width)
    nn.init.xavier_uniform_(weight)
    return nn.Parameter(weight)


class GraphConvLayer(nn.Module):
    """h' = b + W1 h + mean over neighbours of w * W2 h_tau."""

    def __init__(self, config: GnnLayerConfig):
        super().__init__()
        self.config = config
        self.W1 = _linear(config.in_width, config.out_width)
        self.W2 = _linear(config.in_width, config.out_width)
        self.bias = nn.Parameter(torch.zeros(config.out_width))

    def forward(self, batch: GraphBatch) -> torch.Tensor:
        n = batch.num_nodes
        src, dst, weight = batch.directed()
        messages = weight[:, None] * (batch.h @ self.W2.T)[src]
        count = scatter_sum(torch.ones_like(weight), dst, n)
        # isolated nodes get a zero aggregate
        mean = scatter_sum(messages, dst, n) / count.clamp_min(1.0)[:, None]
        return self.bias + batch.h @ self.W1.T + mean


class GcnLayer(nn.Module):
    """Symmetrically normalised convolution over the inclusive neighbourhood."""

    def __init__(self, config: GnnLayerConfig):
        super().__init__()
        self.config = config
        self.W2 = _linear(config.in_width, config.out_width)
        self.bias = nn.Parameter(torch.zeros(config.out_width))

    def forward(self, batch: GraphBatch) -> torch.Tensor:
        n = batch.num_nodes
        src, dst, weight = batch.inclusive()
        _, real_dst, real_weight = batch.directed()
        degree = 1.0 + scatter_sum(real_weight, real_dst, n)
        coefficient = weight / torch.sqrt(degree[dst] * degree[src])
        messages = coefficient[:, None] * (batch.h @ self.W2.T)[src]
        return self.bias + scatter_sum(messages, dst, n)


class GatLayer(nn.Module):
    """
    Attention over the inclusive neighbourhood with the edge weight as an
    extra attention feature; several independent heads.
    """

    def __init__(self, config: GnnLayerConfig):
        super().__init__()
        self.config = config
        heads, out, width = config.heads, config.out_width, config.in_width
        self.W2 = nn.Parameter(torch.stack([_linear(width, out).data for _ in range(heads)]))
        self.W_att = nn.Parameter(torch.stack([_linear(2 * width + 1, out).data for _ in range(heads)]))
        self.a = nn.Parameter(torch.stack([_linear(out, 1).data.reshape(out) for _ in range(heads)]))
        self.bias = nn.Parameter(torch.zeros(config.output_width))

    def attention(self, batch: GraphBatch) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """
        Attention weights of every inclusive edge.

        Returns:
            (source, target, alpha) with alpha of shape (E + N, heads); for
            every target node and head the weights sum to 1
        """
        src, dst, weight = batch.inclusive()
        width = self.config.in_width
        W_center = self.W_att[:, :, :width]
        W_neighbour = self.W_att[:, :, width:2 * width]
        w_edge = self.W_att[:, :, 2 * width]
        center = torch.einsum('hoi,ni->nho', W_center, batch.h)
        neighbour = torch.einsum('hoi,ni->nho', W_neighbour, batch.h)
        z = center[dst] + neighbour[src] + weight[:, None, None] * w_edge
        logits = (leaky_relu(z, self.config.leaky_slope) * self.a).sum(-1)
        return src, dst, segment_softmax(logits, dst, batch.num_nodes)

    def dense_attention(self, batch: GraphBatch, head: int = 0) -> torch.Tensor:
        """(N, N) matrix with row nu holding the distribution over its inclusive neighbourhood."""
        src, dst, alpha = self.attention(batch)
        dense = alpha.new_zeros(batch.num_nodes, batch.num_nodes)
        return dense.index_put((dst, src), alpha[:, head])

    def aggregate(self, batch: GraphBatch) -> torch.Tensor:
        src, dst, alpha = self.attention(batch)
        values = torch.einsum('hoi,ni->nho', self.W2, batch.h)
        per_head = scatter_sum(alpha[..., None] * values[src], dst, batch.num_nodes)
        if self.config.combine == HeadCombination.CONCATENATE:
            return per_head.reshape(batch.num_nodes, -1)
        return per_head.mean(dim=1)

    def forward(self, batch: GraphBatch) -> torch.Tensor:
        return self.bias + self.aggregate(batch)


class GatPlusLayer(GatLayer):
    """GAT with an extra linear map of the centre node."""

    def __init__(self, config: GnnLayerConfig):
        super().__init__(config)
        self.W1 = _linear(config.in_width, config.output_width)

    def forward(self, batch: GraphBatch) -> torch.Tensor:
        return self.bias + batch.h @ self.W1.T + self.aggregate(batch)


LAYER_TYPES = {
    GnnKind.GRAPHCONV: GraphConvLayer,
    GnnKind.GCN: GcnLayer,
    GnnKind.GAT: GatLayer,
    GnnKind.GATPLUS: GatPlusLayer,
}


def make_layer(config: GnnLayerConfig) -> nn.Module:
    return LAYER_TYPES[config.kind](config)


def graphconv_forward(batch: GraphBatch, layer: GraphConvLayer) -> torch.Tensor:
    return layer(batch)


def gcn_forward(batch: GraphBatch, layer: GcnLayer) -> torch.Tensor:
    return layer(batch)


def gat_attention_weights(batch: GraphBatch, layer: GatLayer, head: int = 0) -> torch.Tensor:
    return layer.dense_attention(batch, head)


def gat_forward(batch: GraphBatch, layer: GatLayer) -> torch.Tensor:
    return layer(batch)


def gatplus_forward(batch: GraphBatch, layer: GatPlusLayer) -> torch.Tensor:
    return layer(batch)
