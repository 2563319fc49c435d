"""
Ego-centric scene graphs and graph sequences.
"""
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from ..core.errors import DataFormatError
from .features import FEATURE_DIM, SceneKind


@dataclass(frozen=True)
class EgoGraph:
    """Complete undirected graph over the agents of one time step."""
    agent_ids: tuple
    center: int
    edges: np.ndarray  # (E, 2), i < j
    distances: np.ndarray  # (N, N)

    @property
    def num_nodes(self) -> int:
        return len(self.agent_ids)

    @property
    def num_edges(self) -> int:
        return len(self.edges)


def pairwise_distances(positions: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix of (N, 2) positions."""
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def complete_edges(nodes: Sequence[int]) -> np.ndarray:
    """All unordered pairs of the given node indices."""
    pairs = list(combinations(sorted(nodes), 2))
    if not pairs:
        return np.zeros((0, 2), dtype=np.int64)
    return np.asarray(pairs, dtype=np.int64)


def build_ego_graph(agent_ids: Sequence[int], positions: np.ndarray, center: int) -> EgoGraph:
    """
    Build the complete undirected graph around a centre agent.

    Args:
        agent_ids: Agents present at the prediction instant
        positions: (N, 2) positions in the same order
        center: Id of the graph-centred agent

    Returns:
        EgoGraph with node order following agent_ids
    """
    ids = tuple(int(a) for a in agent_ids)
    if not ids:
        raise ValueError("An ego graph needs at least one agent")
    if len(set(ids)) != len(ids):
        raise DataFormatError(f"Duplicate agent ids: {ids}")
    if center not in ids:
        raise ValueError(f"Centre agent {center} is not among {ids}")
    positions = np.asarray(positions, dtype=np.float64).reshape(len(ids), 2)
    return EgoGraph(
        agent_ids=ids,
        center=ids.index(center),
        edges=complete_edges(range(len(ids))),
        distances=pairwise_distances(positions),
    )


@dataclass(frozen=True)
class SceneSequence:
    """
    One training/evaluation sample: graph sequence over the history plus
    the future of every agent present at the prediction instant.

    Arrays are indexed (agent, step, ...). History steps run from t - t_h
    to t, so the last history slot is the prediction instant. Positions are
    relative to ``origin``.
    """
    agent_ids: np.ndarray  # (N,)
    features: np.ndarray  # (N, H, FEATURE_DIM)
    mask: np.ndarray  # (N, H) bool, True where observed
    distances: np.ndarray  # (H, N, N)
    future: np.ndarray  # (N, t_f, 4) x, y, vx, vy
    future_valid: np.ndarray  # (N,) bool
    categories: np.ndarray  # (N,) category index
    center: int
    sample_time: float
    kind: SceneKind
    origin: np.ndarray = field(default_factory=lambda: np.zeros(2))
    name: str = ""

    def __post_init__(self):
        self.validate()

    @property
    def num_agents(self) -> int:
        return len(self.agent_ids)

    @property
    def history_length(self) -> int:
        return self.features.shape[1]

    @property
    def horizon(self) -> int:
        return self.future.shape[1]

    @property
    def last_state(self) -> np.ndarray:
        """(N, 4) x, y, vx, vy at the prediction instant."""
        return self.features[:, -1, :4]

    def edges(self, step: int) -> np.ndarray:
        """Undirected edges among the agents observed at a history step."""
        present = np.flatnonzero(self.mask[:, step])
        return complete_edges(present.tolist())

    def validate(self):
        """Check the structural invariants; raises DataFormatError."""
        n, h = self.mask.shape
        if self.sample_time <= 0:
            raise DataFormatError(f"Sample time must be positive, got {self.sample_time}")
        if len(set(self.agent_ids.tolist())) != n:
            raise DataFormatError("Agent ids must be unique within a scene")
        if self.features.shape != (n, h, FEATURE_DIM):
            raise DataFormatError(f"Feature array has shape {self.features.shape}, expected {(n, h, FEATURE_DIM)}")
        if self.distances.shape != (h, n, n):
            raise DataFormatError(f"Distance array has shape {self.distances.shape}, expected {(h, n, n)}")
        if self.future.shape[0] != n or self.future.shape[2] != 4:
            raise DataFormatError(f"Future array has shape {self.future.shape}")
        if n and not self.mask[:, -1].all():
            raise DataFormatError("Every agent must be observed at the prediction instant")
        if not 0 <= self.center < max(n, 1):
            raise DataFormatError(f"Centre index {self.center} out of range")
        if not np.all(np.isfinite(self.features)):
            raise DataFormatError("Scene features must be finite")
        if not np.allclose(self.distances, np.swapaxes(self.distances, 1, 2)):
            raise DataFormatError("Distances must be symmetric")
        if np.any(self.distances < 0):
            raise DataFormatError("Distances must be nonnegative")
        for step in range(h):
            present = self.mask[:, step]
            block = self.distances[step][np.ix_(present, present)]
            off_diagonal = ~np.eye(len(block), dtype=bool)
            if np.any(block[off_diagonal] == 0):
                raise DataFormatError(f"Distinct agents at zero distance at history step {step}")

    def summary(self, center_only: bool = False) -> str:
        agents = 1 if center_only else self.num_agents
        return (
            f"{self.name or 'scene'}: {agents} agent(s), {self.kind} scene, "
            f"{self.history_length} history steps, {self.horizon} future steps, T_s={self.sample_time}s"
        )
