"""
Shared fixtures: tiny scenes, tiny configurations and the slow-test switch.
"""
import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.data import SceneGeometry, TrajectoryTable, downsample, generate_synthetic, window_scenes  # noqa: E402
from src.scenes import SceneKind, SceneSequence, pairwise_distances  # noqa: E402
from src.training import TrainConfig  # noqa: E402


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help="run desk-scale learning experiments")


def pytest_configure(config):
    config.addinivalue_line('markers', "slow: desk-scale learning experiment (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


def make_scene(
    positions: np.ndarray,
    velocities: np.ndarray = None,
    horizon: int = 4,
    sample_time: float = 0.2,
    mask: np.ndarray = None,
    kind: SceneKind = SceneKind.JUNCTION,
    center: int = 0,
    name: str = "scene",
) -> SceneSequence:
    """
    Constant-velocity scene from (N, H, 2) history positions.

    Futures continue the last velocity; context features are the polar
    coordinates around the origin.
    """
    positions = np.asarray(positions, dtype=np.float64)
    n, h, _ = positions.shape
    if velocities is None:
        velocities = np.zeros((n, 2))
        if h > 1:
            velocities = (positions[:, -1] - positions[:, -2]) / sample_time
    mask = np.ones((n, h), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    features = np.zeros((n, h, 9))
    features[..., :2] = positions
    features[..., 2:4] = velocities[:, None, :]
    features[..., 6] = np.arctan2(velocities[:, 1], velocities[:, 0])[:, None]
    features[..., 7] = np.hypot(positions[..., 0], positions[..., 1])
    features[..., 8] = np.arctan2(-positions[..., 1], positions[..., 0])
    features = np.where(mask[..., None], features, 0.0)
    distances = np.zeros((h, n, n))
    for k in range(h):
        present = np.flatnonzero(mask[:, k])
        distances[k][np.ix_(present, present)] = pairwise_distances(positions[present, k])
    steps = np.arange(1, horizon + 1)[None, :, None] * sample_time
    future = np.zeros((n, horizon, 4))
    future[..., :2] = positions[:, -1, None, :] + steps * velocities[:, None, :]
    future[..., 2:] = velocities[:, None, :]
    return SceneSequence(
        agent_ids=np.arange(n, dtype=np.int64) + 1,
        features=features,
        mask=mask,
        distances=distances,
        future=future,
        future_valid=np.ones(n, dtype=bool),
        categories=np.full(n, 2, dtype=np.int64),
        center=center,
        sample_time=sample_time,
        kind=kind,
        name=name,
    )


@pytest.fixture
def three_agent_scene() -> SceneSequence:
    """Three agents, 5 history slots, 4 future steps."""
    start = np.array([[-20.0, 0.0], [-5.0, 3.0], [10.0, -4.0]])
    velocity = np.array([[8.0, 0.0], [6.0, 1.0], [5.0, -0.5]])
    times = (np.arange(5) - 4) * 0.2
    positions = start[:, None, :] + times[None, :, None] * velocity[:, None, :]
    return make_scene(positions, velocity, horizon=4)


@pytest.fixture
def tiny_config() -> TrainConfig:
    """Small model on 5 history slots and 4 horizon steps."""
    return TrainConfig(
        epochs=8,
        batch_size=4,
        hidden=8,
        components=2,
        history=0.8,
        horizon=0.8,
        learning_rate=1e-3,
        progress=False,
    )


@pytest.fixture
def highway_geometry() -> SceneGeometry:
    return SceneGeometry.highway([0.0, 3.5, 7.0, 10.5])


@pytest.fixture
def fork_table() -> TrajectoryTable:
    return generate_synthetic('fork', 3, seed=0)


@pytest.fixture
def fork_scenes(fork_table):
    """Windows with 5 history slots and 4 future steps at T_s = 0.2 s."""
    return window_scenes(downsample(fork_table, 5), history=0.8, horizon=0.8, stride=10)
