"""
Tests for the graph layers and layer stacks.
"""
import os
import sys

import pytest
import torch
from torch.func import functional_call

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.core import ParameterSet, check_gradients  # noqa: E402
from src.gnn import (  # noqa: E402
    GatLayer,
    GatPlusLayer,
    GcnLayer,
    GnnKind,
    GnnLayerConfig,
    GnnStack,
    GraphBatch,
    GraphConvLayer,
    HeadCombination,
    gat_attention_weights,
    gat_forward,
    gatplus_forward,
    gcn_forward,
    graphconv_forward,
    segment_softmax,
    stack_configs,
)

DT = torch.float64


def pair_batch(h, weight=1.0):
    """Two nodes joined by one edge."""
    return GraphBatch(
        h=torch.as_tensor(h, dtype=DT),
        edges=torch.tensor([[0], [1]]),
        weights=torch.tensor([weight], dtype=DT),
    )


def isolated_batch(h):
    h = torch.as_tensor(h, dtype=DT)
    return GraphBatch(h=h, edges=torch.zeros((2, 0), dtype=torch.long), weights=torch.zeros(0, dtype=DT))


def layer(cls, kind, width=2, out=None, heads=1, combine=HeadCombination.CONCATENATE):
    config = GnnLayerConfig(kind, width, width if out is None else out, heads=heads, combine=combine)
    return cls(config).double()


def set_parameters(module, **values):
    with torch.no_grad():
        for name, value in values.items():
            getattr(module, name).copy_(torch.as_tensor(value, dtype=DT))


def test_graphconv_pair_sum():
    """Test that W1 = W2 = I and w = 1 add the neighbour to the node."""
    conv = layer(GraphConvLayer, GnnKind.GRAPHCONV)
    set_parameters(conv, W1=torch.eye(2), W2=torch.eye(2))
    h = [[1.0, 2.0], [3.0, -1.0]]
    out = graphconv_forward(pair_batch(h), conv)
    assert torch.allclose(out, torch.tensor([[4.0, 1.0], [4.0, 1.0]], dtype=DT))
    print("✓ GraphConv works")


def test_graphconv_isolated_node():
    """Test that an isolated node gets b + W1 h."""
    conv = layer(GraphConvLayer, GnnKind.GRAPHCONV)
    set_parameters(conv, bias=[0.5, -0.5])
    h = torch.tensor([[1.0, 2.0]], dtype=DT)
    out = conv(isolated_batch(h))
    assert torch.allclose(out, conv.bias + h @ conv.W1.T)


def test_graphconv_mean_of_identical_neighbours():
    """Test that two identical neighbours average to W2 h."""
    conv = layer(GraphConvLayer, GnnKind.GRAPHCONV)
    set_parameters(conv, W1=torch.zeros(2, 2))
    h = torch.tensor([[0.0, 0.0], [1.0, 2.0], [1.0, 2.0]], dtype=DT)
    batch = GraphBatch(h, torch.tensor([[0, 0], [1, 2]]), torch.ones(2, dtype=DT))
    out = conv(batch)
    assert torch.allclose(out[0], conv.W2 @ h[1])


def test_gcn_normalisation():
    """Test the symmetric normalisation on a pair and on an isolated node."""
    gcn = layer(GcnLayer, GnnKind.GCN)
    set_parameters(gcn, W2=torch.eye(2))
    h = torch.tensor([[2.0, 0.0], [0.0, 4.0]], dtype=DT)
    out = gcn_forward(pair_batch(h), gcn)
    # degree 2 on both ends: coefficient 1/2 for self and neighbour
    assert torch.allclose(out, torch.tensor([[1.0, 2.0], [1.0, 2.0]], dtype=DT))
    alone = gcn(isolated_batch(h[:1]))
    assert torch.allclose(alone, h[:1])
    # zero-weight edge reduces to the isolated case
    assert torch.allclose(gcn(pair_batch(h, weight=0.0)), h)
    print("✓ GCN works")


def test_gat_uniform_attention_on_identical_nodes():
    """Test that identical nodes and weights give uniform attention."""
    gat = layer(GatLayer, GnnKind.GAT)
    h = torch.ones(3, 2, dtype=DT)
    batch = GraphBatch(h, torch.tensor([[0, 0, 1], [1, 2, 2]]), torch.full((3,), 0.4, dtype=DT))
    alpha = gat_attention_weights(batch, gat)
    assert torch.allclose(alpha, torch.full((3, 3), 1.0 / 3.0, dtype=DT))


def test_gat_attention_distributions():
    """Test that attention rows sum to 1 and an isolated node attends to itself."""
    torch.manual_seed(0)
    gat = layer(GatLayer, GnnKind.GAT, heads=2)
    h = torch.randn(4, 2, dtype=DT)
    batch = GraphBatch(h, torch.tensor([[0, 0, 1], [1, 2, 2]]), torch.tensor([0.9, 0.2, 0.5], dtype=DT))
    for head in range(2):
        alpha = gat.dense_attention(batch, head)
        assert torch.all(alpha >= 0)
        assert torch.allclose(alpha.sum(dim=1), torch.ones(4, dtype=DT))
        assert alpha[3, 3].item() == pytest.approx(1.0)


def test_gat_isolated_node():
    """Test that an isolated node gets W2 h from a single head."""
    gat = layer(GatLayer, GnnKind.GAT)
    h = torch.tensor([[0.3, -1.2]], dtype=DT)
    out = gat_forward(isolated_batch(h), gat)
    assert torch.allclose(out[0], gat.W2[0] @ h[0])


def test_gatplus_reductions():
    """Test GAT+ against GAT with W1 = 0 and against W1 h with W2 = 0."""
    torch.manual_seed(1)
    plus = layer(GatPlusLayer, GnnKind.GATPLUS)
    plain = layer(GatLayer, GnnKind.GAT)
    plain.load_state_dict({k: v for k, v in plus.state_dict().items() if k != 'W1'})
    h = torch.randn(3, 2, dtype=DT)
    batch = GraphBatch(h, torch.tensor([[0, 1], [1, 2]]), torch.tensor([0.7, 0.1], dtype=DT))

    set_parameters(plus, W1=torch.zeros(2, 2))
    assert torch.allclose(gatplus_forward(batch, plus), gat_forward(batch, plain))

    set_parameters(plus, W1=torch.eye(2), W2=torch.zeros(1, 2, 2))
    assert torch.allclose(plus(batch), h)
    print("✓ GAT+ works")


def test_gatplus_isolated_node():
    """Test that an isolated node gets W1 h + W2 h."""
    plus = layer(GatPlusLayer, GnnKind.GATPLUS)
    h = torch.tensor([[1.0, 0.5]], dtype=DT)
    out = plus(isolated_batch(h))
    assert torch.allclose(out[0], plus.W1 @ h[0] + plus.W2[0] @ h[0])


def test_head_combination_widths():
    """Test that concatenated heads widen the output and averaged heads do not."""
    h = torch.randn(3, 4, dtype=DT)
    batch = GraphBatch(h, torch.tensor([[0], [2]]), torch.tensor([0.5], dtype=DT))
    concat = layer(GatLayer, GnnKind.GAT, width=4, out=5, heads=3)
    average = layer(GatLayer, GnnKind.GAT, width=4, out=5, heads=3, combine=HeadCombination.AVERAGE)
    assert concat(batch).shape == (3, 15)
    assert average(batch).shape == (3, 5)


def test_segment_softmax_groups():
    """Test that softmax normalises within each target group only."""
    logits = torch.tensor([1.0, 2.0, 3.0, 50.0], dtype=DT)
    index = torch.tensor([0, 0, 1, 1])
    out = segment_softmax(logits, index, 2)
    assert out[:2].sum().item() == pytest.approx(1.0)
    assert out[2:].sum().item() == pytest.approx(1.0)
    assert torch.isfinite(out).all()


def test_stack_configs():
    """Test that hidden layers concatenate heads and the last layer averages them."""
    configs = stack_configs(GnnKind.GAT, 9, 8, layers=2, hidden=6, heads=2)
    assert configs[0].output_width == 12
    assert configs[1].in_width == 12
    assert configs[1].output_width == 8
    with pytest.raises(ValueError):
        stack_configs(GnnKind.GCN, 9, 8, layers=0)
    with pytest.raises(ValueError):
        GnnLayerConfig(GnnKind.GCN, 0, 8)


@pytest.mark.parametrize('kind', list(GnnKind))
def test_stack_permutation_equivariance(kind):
    """Test that relabelling nodes permutes the stack output the same way."""
    torch.manual_seed(2)
    stack = GnnStack.build(kind, 3, 4, layers=2, heads=2).double()
    h = torch.randn(4, 3, dtype=DT)
    edges = torch.tensor([[0, 0, 1, 2], [1, 3, 3, 3]])
    weights = torch.tensor([0.9, 0.1, 0.4, 0.6], dtype=DT)
    perm = torch.tensor([2, 0, 3, 1])
    inverse = torch.argsort(perm)
    out = stack(h, edges, weights)
    permuted = stack(h[perm], inverse[edges], weights)
    assert torch.allclose(permuted, out[perm])


@pytest.mark.parametrize('kind', list(GnnKind))
def test_stack_without_edges_is_per_node(kind):
    """Test that an edge-free stack treats each node independently."""
    torch.manual_seed(3)
    stack = GnnStack.build(kind, 3, 4).double()
    h = torch.randn(3, 3, dtype=DT)
    empty = torch.zeros((2, 0), dtype=torch.long)
    together = stack(h, empty, torch.zeros(0, dtype=DT))
    for i in range(3):
        alone = stack(h[i:i + 1], empty, torch.zeros(0, dtype=DT))
        assert torch.allclose(together[i], alone[0])


@pytest.mark.parametrize('kind', list(GnnKind))
def test_stack_gradients(kind):
    """Test stack gradients against central differences."""
    torch.manual_seed(4)
    stack = GnnStack.build(kind, 3, 2, layers=2, heads=2).double()
    h = torch.randn(3, 3, dtype=DT)
    edges = torch.tensor([[0, 1], [1, 2]])
    weights = torch.tensor([0.8, 0.3], dtype=DT)
    params = ParameterSet.from_module(stack)

    def loss(p):
        out = functional_call(stack, p.as_dict(), (h, edges, weights))
        return (torch.tanh(out) ** 2).sum()

    report = check_gradients(loss, params, per_parameter=6, tolerance=1e-5)
    assert report.passed, report.get_summary()


if __name__ == "__main__":
    test_graphconv_pair_sum()
    test_gcn_normalisation()
    test_gatplus_reductions()
    print("\n✅ Graph layer tests passed!")
