"""Graph layers (GraphConv, GCN, GAT, GAT+) and per-gate layer stacks."""
from .layers import (
    LAYER_TYPES,
    GatLayer,
    GatPlusLayer,
    GcnLayer,
    GnnKind,
    GnnLayerConfig,
    GraphBatch,
    GraphConvLayer,
    HeadCombination,
    gat_attention_weights,
    gat_forward,
    gatplus_forward,
    gcn_forward,
    graphconv_forward,
    make_layer,
    scatter_sum,
    segment_softmax,
)
from .stack import GnnStack, stack_configs

__all__ = [
    'LAYER_TYPES',
    'GatLayer',
    'GatPlusLayer',
    'GcnLayer',
    'GnnKind',
    'GnnLayerConfig',
    'GraphBatch',
    'GraphConvLayer',
    'HeadCombination',
    'gat_attention_weights',
    'gat_forward',
    'gatplus_forward',
    'gcn_forward',
    'graphconv_forward',
    'make_layer',
    'scatter_sum',
    'segment_softmax',
    'GnnStack',
    'stack_configs',
]
