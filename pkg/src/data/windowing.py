"""
Sliding-window extraction of scene sequences from a trajectory table.
"""
import logging
from enum import Enum
from typing import List, Sequence

import numpy as np
import pandas as pd

from ..scenes import AgentCategory, SceneKind, SceneSequence, lane_context, pairwise_distances, polar_context
from .table import TrajectoryTable

logger = logging.getLogger(__name__)

DEFAULT_HISTORY = 3.0
DEFAULT_HORIZON = 5.0
DEFAULT_STRIDE = 10
STATE_COLUMNS = ['x', 'y', 'vx', 'vy', 'ax', 'ay', 'psi']


class CenterPolicy(Enum):
    """Which agent a window's graph is centred on."""
    FIRST = "first"
    RANDOM = "random"
    ALL = "all"

    def __str__(self):
        return self.value


def window_lengths(sample_time: float, history: float, horizon: float):
    """(history slots including the prediction instant, future steps)."""
    if history < 0 or horizon <= 0:
        raise ValueError(f"Need history >= 0 and horizon > 0, got {history} and {horizon}")
    return int(round(history / sample_time)) + 1, int(round(horizon / sample_time))


def contiguous_runs(frames: np.ndarray, step: int) -> List[np.ndarray]:
    """Split sorted frame numbers wherever the spacing is not ``step``."""
    if len(frames) == 0:
        return []
    breaks = np.flatnonzero(np.diff(frames) != step) + 1
    return np.split(frames, breaks)


def _context(kind: SceneKind, x: np.ndarray, y: np.ndarray, origin: np.ndarray, lane_lines) -> np.ndarray:
    """(..., 2) context features of positions relative to ``origin``."""
    out = np.zeros(x.shape + (2,))
    for index in np.ndindex(x.shape):
        if kind == SceneKind.HIGHWAY:
            out[index] = lane_context(float(y[index]), float(origin[1]), lane_lines)
        else:
            out[index] = polar_context(float(x[index]), float(y[index]), 0.0, 0.0)
    return out


def window_scenes(
    table: TrajectoryTable,
    history: float = DEFAULT_HISTORY,
    horizon: float = DEFAULT_HORIZON,
    stride: int = DEFAULT_STRIDE,
    center: str = "first",
    seed: int = 0,
) -> List[SceneSequence]:
    """
    Cut a (downsampled) table into scene sequences.

    Every window holds the agents present at its prediction instant. Agents
    that appear later in the history are masked before their first frame;
    agents leaving before the end of the horizon keep their slot with
    ``future_valid`` False and a future padded with their last known state.

    Args:
        table: Trajectory table on its final sample grid
        history: t_h in seconds
        horizon: t_f in seconds
        stride: Steps between consecutive prediction instants
        center: 'first' (lowest agent id), 'random' (seeded) or 'all'
            (one sequence per eligible agent)
        seed: Seed of the random centre choice

    Returns:
        Scene sequences; windows without any agent with a full future are skipped
    """
    if stride < 1:
        raise ValueError(f"Window stride must be at least 1, got {stride}")
    policy = CenterPolicy(center)
    if table.num_rows == 0:
        return []
    T_s = table.sample_time
    slots, steps = window_lengths(T_s, history, horizon)
    frame_step = table.frame_step
    rng = np.random.default_rng(seed)
    indexed = table.rows.set_index(['agent_id', 'frame']).sort_index()
    by_frame = table.rows.groupby('frame')['agent_id'].apply(lambda ids: np.sort(ids.to_numpy()))

    scenes = []
    skipped = 0
    for run in contiguous_runs(table.frames(), frame_step):
        first, last = int(run[0]), int(run[-1])
        instant = first + (slots - 1) * frame_step
        while instant + steps * frame_step <= last:
            produced = _windows_at(table, indexed, by_frame[instant], instant, slots, steps, policy, rng)
            skipped += not produced
            scenes.extend(produced)
            instant += stride * frame_step
    logger.info("%s: %d window(s) of %d+%d steps, %d skipped", table.name or "table",
                len(scenes), slots, steps, skipped)
    return scenes


def _windows_at(
    table: TrajectoryTable,
    indexed: pd.DataFrame,
    agents: np.ndarray,
    instant: int,
    slots: int,
    steps: int,
    policy: CenterPolicy,
    rng: np.random.Generator,
) -> List[SceneSequence]:
    frame_step = table.frame_step
    history_frames = instant + frame_step * np.arange(-(slots - 1), 1)
    future_frames = instant + frame_step * np.arange(1, steps + 1)
    n = len(agents)

    def block(frames):
        index = pd.MultiIndex.from_product([agents, frames], names=['agent_id', 'frame'])
        return indexed.reindex(index)

    past = block(history_frames)
    mask = past['x'].notna().to_numpy().reshape(n, slots)
    states = past[STATE_COLUMNS].to_numpy(dtype=np.float64).reshape(n, slots, len(STATE_COLUMNS))
    ahead = block(future_frames)
    future_present = ahead['x'].notna().to_numpy().reshape(n, steps)
    future = ahead[['x', 'y', 'vx', 'vy']].to_numpy(dtype=np.float64).reshape(n, steps, 4)
    future_valid = future_present.all(axis=1)
    if not future_valid.any():
        return []
    # pad missing future steps with the last known state
    for i in np.flatnonzero(~future_valid):
        known = states[i, -1, :4]
        for k in range(steps):
            if future_present[i, k]:
                known = future[i, k]
            else:
                future[i, k] = known

    categories = np.array([
        AgentCategory.from_label(str(label)).index
        for label in indexed.loc[list(zip(agents, [instant] * n)), 'category']
    ], dtype=np.int64)

    eligible = np.flatnonzero(future_valid)
    if policy == CenterPolicy.FIRST:
        centers = [int(eligible[0])]
    elif policy == CenterPolicy.RANDOM:
        centers = [int(rng.choice(eligible))]
    else:
        centers = [int(c) for c in eligible]

    geometry = table.geometry
    windows = []
    for c in centers:
        if geometry.kind == SceneKind.HIGHWAY:
            origin = states[c, -1, :2].copy()
        else:
            origin = np.asarray(geometry.origin, dtype=np.float64)
        rel_x = states[..., 0] - origin[0]
        rel_y = states[..., 1] - origin[1]
        features = np.zeros((n, slots, 9))
        features[..., 0] = rel_x
        features[..., 1] = rel_y
        features[..., 2:7] = states[..., 2:7]
        features[..., 7:] = _context(geometry.kind, np.nan_to_num(rel_x), np.nan_to_num(rel_y), origin,
                                     geometry.lane_lines)
        features = np.where(mask[..., None], features, 0.0)
        distances = np.zeros((slots, n, n))
        for k in range(slots):
            present = np.flatnonzero(mask[:, k])
            if len(present):
                distances[k][np.ix_(present, present)] = pairwise_distances(states[present, k, :2])
        relative_future = future.copy()
        relative_future[..., :2] -= origin
        windows.append(SceneSequence(
            agent_ids=agents.astype(np.int64),
            features=features,
            mask=mask.copy(),
            distances=distances,
            future=relative_future,
            future_valid=future_valid.copy(),
            categories=categories,
            center=c,
            sample_time=table.sample_time,
            kind=geometry.kind,
            origin=origin,
            name=f"{table.name or 'table'}@{instant}/{int(agents[c])}",
        ))
    return windows


def unwindow(scene: SceneSequence) -> pd.DataFrame:
    """
    Absolute positions held by a scene.

    Returns:
        Frame with columns agent_id, offset (steps from the prediction
        instant, history <= 0 < future), x, y; masked history slots and
        futures of agents without a full future are left out
    """
    records = []
    slots = scene.history_length
    for i, agent in enumerate(scene.agent_ids.tolist()):
        for k in np.flatnonzero(scene.mask[i]):
            x, y = scene.features[i, k, :2] + scene.origin
            records.append((agent, int(k) - (slots - 1), x, y))
        if scene.future_valid[i]:
            for k in range(scene.horizon):
                x, y = scene.future[i, k, :2] + scene.origin
                records.append((agent, k + 1, x, y))
    return pd.DataFrame(records, columns=['agent_id', 'offset', 'x', 'y'])

