"""
Batching of scene sequences into one disjoint-union graph sequence.
"""
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import torch

from .features import NUM_CATEGORIES
from .graph import SceneSequence


@dataclass
class SceneBatch:
    """
    Several scenes stacked along the node axis. Edges never cross scenes.

    Edge lists hold undirected pairs (2, E) per history step; distances at
    the prediction instant are frozen and reused by the decoder.
    """
    features: torch.Tensor  # (N, H, d_f)
    mask: torch.Tensor  # (N, H) bool
    edges: List[torch.Tensor]  # H x (2, E_i) long
    distances: List[torch.Tensor]  # H x (E_i,)
    last_state: torch.Tensor  # (N, 4)
    future: torch.Tensor  # (N, t_f, 4)
    future_valid: torch.Tensor  # (N,) bool
    categories: torch.Tensor  # (N,) long
    scene_index: torch.Tensor  # (N,) long
    center_mask: torch.Tensor  # (N,) bool
    sample_time: float

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def history_length(self) -> int:
        return self.features.shape[1]

    @property
    def horizon(self) -> int:
        return self.future.shape[1]

    @property
    def num_scenes(self) -> int:
        return int(self.scene_index.max().item()) + 1 if self.num_nodes else 0

    @property
    def dtype(self) -> torch.dtype:
        return self.features.dtype

    def decoder_edges(self):
        """The last known graph: edges and distances at the prediction instant."""
        return self.edges[-1], self.distances[-1]

    def static_features(self) -> torch.Tensor:
        """(N, categories) one-hot agent classes."""
        return torch.nn.functional.one_hot(self.categories, NUM_CATEGORIES).to(self.dtype)


def collate(scenes: Sequence[SceneSequence], dtype: torch.dtype = torch.float64) -> SceneBatch:
    """
    Stack scenes into a SceneBatch.

    Raises:
        ValueError: If scenes disagree on history length, horizon or sample time
    """
    if not scenes:
        raise ValueError("Cannot collate an empty list of scenes")
    first = scenes[0]
    for scene in scenes[1:]:
        if scene.history_length != first.history_length or scene.horizon != first.horizon:
            raise ValueError("All scenes in a batch need the same history length and horizon")
        if abs(scene.sample_time - first.sample_time) > 1e-12:
            raise ValueError("All scenes in a batch need the same sample time")

    history = first.history_length
    step_edges = [[] for _ in range(history)]
    step_distances = [[] for _ in range(history)]
    offset = 0
    for scene in scenes:
        for step in range(history):
            pairs = scene.edges(step)
            if len(pairs):
                step_edges[step].append(pairs.T + offset)
                step_distances[step].append(scene.distances[step][pairs[:, 0], pairs[:, 1]])
        offset += scene.num_agents

    def _edges(chunks):
        if not chunks:
            return torch.zeros((2, 0), dtype=torch.long)
        return torch.as_tensor(np.concatenate(chunks, axis=1), dtype=torch.long)

    def _dists(chunks):
        if not chunks:
            return torch.zeros(0, dtype=dtype)
        return torch.as_tensor(np.concatenate(chunks), dtype=dtype)

    scene_index = np.concatenate([np.full(s.num_agents, i) for i, s in enumerate(scenes)])
    center_mask = np.concatenate([np.arange(s.num_agents) == s.center for s in scenes])
    return SceneBatch(
        features=torch.as_tensor(np.concatenate([s.features for s in scenes]), dtype=dtype),
        mask=torch.as_tensor(np.concatenate([s.mask for s in scenes]), dtype=torch.bool),
        edges=[_edges(chunks) for chunks in step_edges],
        distances=[_dists(chunks) for chunks in step_distances],
        last_state=torch.as_tensor(np.concatenate([s.last_state for s in scenes]), dtype=dtype),
        future=torch.as_tensor(np.concatenate([s.future for s in scenes]), dtype=dtype),
        future_valid=torch.as_tensor(np.concatenate([s.future_valid for s in scenes]), dtype=torch.bool),
        categories=torch.as_tensor(np.concatenate([s.categories for s in scenes]), dtype=torch.long),
        scene_index=torch.as_tensor(scene_index, dtype=torch.long),
        center_mask=torch.as_tensor(center_mask, dtype=torch.bool),
        sample_time=float(first.sample_time),
    )
