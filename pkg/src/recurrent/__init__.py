"""Graph-GRU encoder and attention decoder."""
from .gru import GraphGRUCell, gru_cell
from .encoder import EncoderMemory, GraphEncoder, encode, no_edges
from .decoder import (
    INPUT_DIM,
    NOISE_DIM,
    DecodeMode,
    DecoderOutput,
    GraphDecoder,
    TemporalAttention,
    Transition,
    decode,
    temporal_attention,
)

__all__ = [
    'GraphGRUCell',
    'gru_cell',
    'EncoderMemory',
    'GraphEncoder',
    'encode',
    'no_edges',
    'INPUT_DIM',
    'NOISE_DIM',
    'DecodeMode',
    'DecoderOutput',
    'GraphDecoder',
    'TemporalAttention',
    'Transition',
    'decode',
    'temporal_attention',
]
