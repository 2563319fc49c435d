"""Traffic scenes as graph sequences."""
from .features import (
    CONTEXT_FEATURES,
    FEATURE_DIM,
    NODE_FEATURES,
    NUM_CATEGORIES,
    AgentCategory,
    ContextFeatures,
    NodeFeatures,
    SceneKind,
    StaticFeatures,
    assemble_feature_vector,
    assemble_scene_features,
    kernel_weight,
    lane_context,
    lane_offset,
    polar_context,
    road_offset,
    wrap_angle,
)
from .graph import EgoGraph, SceneSequence, build_ego_graph, complete_edges, pairwise_distances
from .batch import SceneBatch, collate

__all__ = [
    'CONTEXT_FEATURES',
    'FEATURE_DIM',
    'NODE_FEATURES',
    'NUM_CATEGORIES',
    'AgentCategory',
    'ContextFeatures',
    'NodeFeatures',
    'SceneKind',
    'StaticFeatures',
    'assemble_feature_vector',
    'assemble_scene_features',
    'kernel_weight',
    'lane_context',
    'lane_offset',
    'polar_context',
    'road_offset',
    'wrap_angle',
    'EgoGraph',
    'SceneSequence',
    'build_ego_graph',
    'complete_edges',
    'pairwise_distances',
    'SceneBatch',
    'collate',
]
