"""
Node, context and static features of traffic agents.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Tuple, Union

import numpy as np
import torch

from ..core.errors import DataFormatError

ArrayLike = Union[float, np.ndarray, torch.Tensor]

NODE_FEATURES = ('x', 'y', 'vx', 'vy', 'ax', 'ay', 'psi')
DEFAULT_SIGMA_E = 10.0


class SceneKind(Enum):
    """Scene families; they differ in their context features."""
    HIGHWAY = "highway"
    JUNCTION = "junction"

    def __str__(self):
        return self.value


CONTEXT_FEATURES = {
    SceneKind.HIGHWAY: ('d_l', 'd_r'),
    SceneKind.JUNCTION: ('r', 'theta'),
}

FEATURE_DIM = len(NODE_FEATURES) + 2


class AgentCategory(Enum):
    """Road-user classes with their one-hot position."""
    PEDESTRIAN = (0, "pedestrian")
    BICYCLE = (1, "bicycle")
    CAR = (2, "car")
    BUS = (3, "bus")
    TRUCK = (4, "truck")

    def __init__(self, index: int, label: str):
        self.index = index
        self.label = label

    def __str__(self):
        return self.label

    @classmethod
    def from_label(cls, label: str) -> 'AgentCategory':
        for category in cls:
            if category.label == label.strip().lower():
                return category
        raise ValueError(f"Unknown agent category: {label!r}")

    @classmethod
    def from_index(cls, index: int) -> 'AgentCategory':
        for category in cls:
            if category.index == index:
                return category
        raise ValueError(f"Unknown agent category index: {index}")


NUM_CATEGORIES = len(AgentCategory)


def wrap_angle(angle: float) -> float:
    """Map an angle into (-pi, pi]."""
    wrapped = math.atan2(math.sin(angle), math.cos(angle))
    return math.pi if wrapped == -math.pi else wrapped


@dataclass(frozen=True)
class NodeFeatures:
    """Time-varying kinematic features of one agent at one step."""
    x: float
    y: float
    vx: float
    vy: float
    ax: float
    ay: float
    psi: float

    def __post_init__(self):
        values = self.as_array()
        if not np.all(np.isfinite(values)):
            raise DataFormatError(f"Node features must be finite: {values.tolist()}")
        if not -math.pi < self.psi <= math.pi:
            raise DataFormatError(f"Yaw angle {self.psi} outside (-pi, pi]")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.vx, self.vy, self.ax, self.ay, self.psi], dtype=np.float64)


@dataclass(frozen=True)
class ContextFeatures:
    """
    Scene-specific context: lane and road offsets on highways, polar
    coordinates around the junction origin elsewhere.
    """
    kind: SceneKind
    first: float
    second: float

    @classmethod
    def lane(cls, d_l: float, d_r: float) -> 'ContextFeatures':
        return cls(SceneKind.HIGHWAY, d_l, d_r)

    @classmethod
    def polar(cls, r: float, theta: float) -> 'ContextFeatures':
        if r < 0:
            raise DataFormatError(f"Polar radius must be nonnegative, got {r}")
        return cls(SceneKind.JUNCTION, r, theta)

    def as_array(self) -> np.ndarray:
        return np.array([self.first, self.second], dtype=np.float64)


@dataclass(frozen=True)
class StaticFeatures:
    """Time-invariant agent class."""
    category: AgentCategory

    def one_hot(self) -> np.ndarray:
        encoding = np.zeros(NUM_CATEGORIES, dtype=np.float64)
        encoding[self.category.index] = 1.0
        return encoding


def kernel_weight(distance: ArrayLike, sigma_e: ArrayLike = DEFAULT_SIGMA_E) -> ArrayLike:
    """
    Gaussian edge weight exp(-(d / sigma_e)^2).

    Works on floats, numpy arrays and tensors; with a tensor sigma_e the
    weight is differentiable in the bandwidth.
    """
    if isinstance(distance, torch.Tensor) or isinstance(sigma_e, torch.Tensor):
        return torch.exp(-(torch.as_tensor(distance) / sigma_e) ** 2)
    if np.any(np.asarray(sigma_e) <= 0):
        raise ValueError(f"Kernel bandwidth must be positive, got {sigma_e}")
    result = np.exp(-(np.asarray(distance, dtype=np.float64) / sigma_e) ** 2)
    return float(result) if np.ndim(result) == 0 else result


def lane_offset(y: float, y0: float, lane_left: float, lane_width: float) -> float:
    """
    Lateral position inside the current lane: -1 on the left divider,
    0 at the centreline, +1 on the right divider.
    """
    if lane_width <= 0:
        raise ValueError(f"Lane width must be positive, got {lane_width}")
    return 2.0 * (y + y0 - lane_left) / lane_width - 1.0


def road_offset(y: float, y0: float, road_left: float, road_width: float) -> float:
    """Same as lane_offset with the left-most divider and the full road breadth."""
    return lane_offset(y, y0, road_left, road_width)


def lane_context(y: float, y0: float, lane_lines: Sequence[float]) -> Tuple[float, float]:
    """
    (d_l, d_r) for an agent given the sorted lateral coordinates of all lane
    dividers. Agents outside the road are assigned to the nearest lane.
    """
    lines = sorted(lane_lines)
    if len(lines) < 2:
        raise DataFormatError("Highway geometry needs at least two lane dividers")
    absolute = y + y0
    lane = int(np.searchsorted(lines, absolute, side='right')) - 1
    lane = min(max(lane, 0), len(lines) - 2)
    d_l = lane_offset(y, y0, lines[lane], lines[lane + 1] - lines[lane])
    d_r = road_offset(y, y0, lines[0], lines[-1] - lines[0])
    return d_l, d_r


def polar_context(x: float, y: float, x0: float, y0: float) -> Tuple[float, float]:
    """
    Polar coordinates of an agent around the origin (x0, y0).

    Returns:
        (r, theta) with theta = atan2(y0 - y, x - x0)
    """
    r = math.hypot(x0 - x, y0 - y)
    theta = math.atan2(y0 - y, x - x0)
    return r, theta


def assemble_feature_vector(
    node: NodeFeatures,
    ctx: ContextFeatures,
    kind: SceneKind = None,
) -> np.ndarray:
    """
    Concatenate node features (NODE_FEATURES order) and context features.

    Args:
        node: Kinematic features
        ctx: Context features
        kind: Expected scene kind; a context of another kind is rejected

    Returns:
        Vector of length FEATURE_DIM
    """
    if kind is not None and ctx.kind != kind:
        raise DataFormatError(f"Context of kind {ctx.kind} in a {kind} scene")
    return np.concatenate([node.as_array(), ctx.as_array()])


def assemble_scene_features(nodes: Sequence[NodeFeatures], contexts: Sequence[ContextFeatures]) -> np.ndarray:
    """Stack feature vectors of one scene, rejecting mixed context kinds."""
    if len(nodes) != len(contexts):
        raise ValueError(f"{len(nodes)} node feature sets but {len(contexts)} contexts")
    if not nodes:
        return np.zeros((0, FEATURE_DIM))
    kinds = {ctx.kind for ctx in contexts}
    if len(kinds) > 1:
        raise DataFormatError(f"Mixed context kinds in one scene: {sorted(str(k) for k in kinds)}")
    kind = kinds.pop()
    return np.stack([assemble_feature_vector(n, c, kind) for n, c in zip(nodes, contexts)])
