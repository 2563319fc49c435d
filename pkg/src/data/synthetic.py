"""
Synthetic traffic scenes: highway, roundabout and fork.

Every agent is simulated on a reference path (or, on the highway, on a
lane with cosine lane changes). Only positions are simulated; velocities
and accelerations are forward differences of the stored positions and the
yaw follows the velocity, so the kinematic columns are consistent with the
trajectories by construction.

Scenes are stacked into one table: scene s occupies frames
s * SCENE_FRAME_OFFSET onwards and uses agent ids s * AGENT_ID_STRIDE + k.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..scenes import AgentCategory
from .paths import Arc, Line, ReferencePath
from .table import COLUMNS, SceneGeometry, TrajectoryTable

logger = logging.getLogger(__name__)

SCENE_FRAME_OFFSET = 1000
AGENT_ID_STRIDE = 100
SCENARIO_KINDS = ('highway', 'roundabout', 'fork')


@dataclass(frozen=True)
class DriverParams:
    """Intelligent-driver-model car-following parameters."""
    a_max: float = 1.5
    b_comf: float = 2.0
    delta: int = 4
    s0: float = 2.0
    headway: float = 1.2
    length: float = 5.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one scenario family."""
    name: str
    rate_hz: float = 25.0
    frames: int = 201
    min_agents: int = 2
    max_agents: int = 5
    speed_range: Tuple[float, float] = (10.0, 14.0)
    # highway
    lanes: int = 3
    lane_width: float = 3.5
    lane_change_probability: float = 0.4
    lane_change_duration: float = 4.0
    truck_fraction: float = 0.2
    # roundabout
    radius: float = 20.0
    circulating_speed: float = 8.0
    yield_probability: float = 0.5
    conflict_angle: float = 1.3
    stop_margin: float = 4.0
    # fork
    branch_radius: float = 60.0
    branch_angle: float = 0.35
    left_probability: float = 0.5

    def __post_init__(self):
        if self.frames < 2:
            raise ValueError(f"A scene needs at least 2 frames, got {self.frames}")
        if not 1 <= self.min_agents <= self.max_agents < AGENT_ID_STRIDE:
            raise ValueError(f"Invalid agent range [{self.min_agents}, {self.max_agents}]")
        if self.frames >= SCENE_FRAME_OFFSET:
            raise ValueError(f"At most {SCENE_FRAME_OFFSET - 1} frames per scene, got {self.frames}")

    @property
    def dt(self) -> float:
        return 1.0 / self.rate_hz

    def geometry(self) -> SceneGeometry:
        if self.name == 'highway':
            return SceneGeometry.highway([i * self.lane_width for i in range(self.lanes + 1)], self.rate_hz)
        return SceneGeometry.junction((0.0, 0.0), self.rate_hz)


SCENARIO_CONFIGS: Dict[str, ScenarioConfig] = {
    'highway': ScenarioConfig(
        name='highway',
        min_agents=3,
        max_agents=6,
        speed_range=(24.0, 34.0),
    ),
    'roundabout': ScenarioConfig(
        name='roundabout',
        min_agents=2,
        max_agents=5,
        speed_range=(8.0, 11.0),
    ),
    'fork': ScenarioConfig(
        name='fork',
        min_agents=1,
        max_agents=3,
        speed_range=(10.0, 14.0),
    ),
}


@dataclass
class SimulatedAgent:
    """Positions of one agent over frames + 2 (the extra two feed the differences)."""
    positions: np.ndarray
    category: AgentCategory
    initial_heading: float


def idm_acceleration(speed: float, desired: float, gap: float, lead_speed: float, driver: DriverParams) -> float:
    """Intelligent-driver-model acceleration."""
    dv = speed - lead_speed
    s_star = driver.s0 + max(0.0, speed * driver.headway + speed * dv / (2.0 * math.sqrt(driver.a_max * driver.b_comf)))
    return driver.a_max * (
        1.0 - (speed / max(0.1, desired)) ** driver.delta - (s_star / max(1e-3, gap)) ** 2
    )


def _highway_scene(config: ScenarioConfig, rng: np.random.Generator) -> List[SimulatedAgent]:
    driver = DriverParams()
    dt = config.dt
    steps = config.frames + 2
    count = int(rng.integers(config.min_agents, config.max_agents + 1))
    centers = (np.arange(config.lanes) + 0.5) * config.lane_width
    lane_front = np.full(config.lanes, rng.uniform(0.0, 20.0))

    lanes, xs, speeds, desired, categories, changes = [], [], [], [], [], []
    for _ in range(count):
        lane = int(rng.integers(config.lanes))
        lane_front[lane] += rng.uniform(25.0, 45.0)
        truck = rng.random() < config.truck_fraction
        v0 = rng.uniform(22.0, 25.0) if truck else rng.uniform(*config.speed_range)
        lanes.append(lane)
        xs.append(lane_front[lane])
        desired.append(v0)
        speeds.append(v0 * rng.uniform(0.9, 1.0))
        categories.append(AgentCategory.TRUCK if truck else AgentCategory.CAR)
        change = None
        if rng.random() < config.lane_change_probability:
            options = [d for d in (-1, 1) if 0 <= lane + d < config.lanes]
            direction = options[int(rng.integers(len(options)))]
            latest = steps * dt - config.lane_change_duration - 0.5
            change = (rng.uniform(0.5, max(0.5, latest)), direction)
        changes.append(change)

    x = np.array(xs, dtype=np.float64)
    v = np.array(speeds, dtype=np.float64)
    positions = np.zeros((count, steps, 2))
    for k in range(steps):
        t = k * dt
        y = np.empty(count)
        for i in range(count):
            y[i] = centers[lanes[i]]
            if changes[i] is not None:
                start, direction = changes[i]
                tau = min(max((t - start) / config.lane_change_duration, 0.0), 1.0)
                y[i] += direction * config.lane_width * 0.5 * (1.0 - math.cos(math.pi * tau))
        positions[:, k, 0] = x
        positions[:, k, 1] = y
        acc = np.empty(count)
        for i in range(count):
            gap, lead_speed = 1e9, desired[i]
            for j in range(count):
                if j != i and x[j] > x[i] and abs(y[j] - y[i]) < 0.75 * config.lane_width:
                    candidate = x[j] - x[i] - driver.length
                    if candidate < gap:
                        gap, lead_speed = candidate, v[j]
            acc[i] = idm_acceleration(v[i], desired[i], gap, lead_speed, driver)
        v = np.maximum(0.0, v + acc * dt)
        x = x + v * dt
    return [SimulatedAgent(positions[i], categories[i], 0.0) for i in range(count)]


def _tangent_line_into(radius: float, angle: float, length: float) -> Line:
    """Straight road that touches the circle at ``angle`` heading counter-clockwise."""
    heading = angle + math.pi / 2
    end = (radius * math.cos(angle), radius * math.sin(angle))
    start = (end[0] - length * math.cos(heading), end[1] - length * math.sin(heading))
    return Line(start, heading, length)


def _tangent_line_out(radius: float, angle: float, length: float) -> Line:
    heading = angle + math.pi / 2
    return Line((radius * math.cos(angle), radius * math.sin(angle)), heading, length)


@dataclass
class _RoundaboutAgent:
    path: ReferencePath
    s: float
    speed: float
    desired: float
    entry_angle: Optional[float]
    stop_s: float
    category: AgentCategory


def _wrap_positive(angle: float) -> float:
    return angle % (2.0 * math.pi)


def _roundabout_scene(config: ScenarioConfig, rng: np.random.Generator) -> List[SimulatedAgent]:
    R, dt = config.radius, config.dt
    steps = config.frames + 2
    arms = [i * math.pi / 2 for i in range(4)]
    count = int(rng.integers(config.min_agents, config.max_agents + 1))
    agents: List[_RoundaboutAgent] = []

    def entrant(arm_angle: float, distance: float, speed: float, category: AgentCategory) -> _RoundaboutAgent:
        approach_length = distance + 20.0
        sweep = int(rng.integers(1, 4)) * math.pi / 2
        path = ReferencePath([
            _tangent_line_into(R, arm_angle, approach_length),
            Arc((0.0, 0.0), R, arm_angle, sweep),
            _tangent_line_out(R, arm_angle + sweep, 80.0),
        ])
        return _RoundaboutAgent(path, approach_length - distance, speed, speed, arm_angle,
                                approach_length - config.stop_margin, category)

    # the first agent always enters; a platoon may be timed against it
    first_arm = arms[int(rng.integers(4))]
    v0 = rng.uniform(*config.speed_range)
    distance = v0 * rng.uniform(2.0, 3.5)
    agents.append(entrant(first_arm, distance, v0, AgentCategory.CAR))
    remaining = count - 1

    if remaining > 0 and rng.random() < config.yield_probability:
        platoon = min(remaining, int(rng.integers(1, 4)))
        arrival = distance / v0
        for j in range(platoon):
            arc_to_entry = config.circulating_speed * (arrival + 1.5 * j + rng.uniform(-0.3, 0.3))
            start = first_arm - arc_to_entry / R
            sweep = arc_to_entry / R + int(rng.integers(1, 3)) * math.pi / 2
            path = ReferencePath([Arc((0.0, 0.0), R, start, sweep), _tangent_line_out(R, start + sweep, 80.0)])
            agents.append(_RoundaboutAgent(path, 0.0, config.circulating_speed, config.circulating_speed,
                                           None, 0.0, AgentCategory.CAR))
        remaining -= platoon

    free_arms = [a for a in arms if a != first_arm]
    rng.shuffle(free_arms)
    for arm_angle in free_arms[:remaining]:
        speed = rng.uniform(*config.speed_range)
        category = AgentCategory.BUS if rng.random() < 0.1 else AgentCategory.CAR
        agents.append(entrant(arm_angle, rng.uniform(25.0, 50.0), speed, category))

    headings = [agent.path.heading(agent.s) for agent in agents]
    positions = np.zeros((len(agents), steps, 2))
    for k in range(steps):
        for i, agent in enumerate(agents):
            positions[i, k] = agent.path.position(agent.s)
        for i, agent in enumerate(agents):
            on_circle = isinstance(agent.path.locate(agent.s)[0], Arc) and agent.s >= 0
            target = config.circulating_speed if on_circle else agent.desired
            acc = float(np.clip(2.0 * (target - agent.speed), -3.0, 1.5))
            if agent.entry_angle is not None and agent.s < agent.stop_s and _in_conflict(agents, i, config):
                remaining_distance = agent.stop_s - agent.s
                if remaining_distance < 0.5:
                    agent.speed = 0.0
                    continue
                acc = max(-8.0, -agent.speed ** 2 / (2.0 * remaining_distance))
            agent.speed = max(0.0, agent.speed + acc * dt)
            agent.s += agent.speed * dt
    return [SimulatedAgent(positions[i], agent.category, headings[i]) for i, agent in enumerate(agents)]


def _in_conflict(agents: List[_RoundaboutAgent], index: int, config: ScenarioConfig) -> bool:
    """Whether a circulating agent is approaching or occupying this agent's entry."""
    entry = agents[index].entry_angle
    for j, other in enumerate(agents):
        if j == index:
            continue
        segment, _ = other.path.locate(other.s)
        if not isinstance(segment, Arc):
            continue
        x, y = other.path.position(other.s)
        upstream = _wrap_positive(entry - math.atan2(y, x))
        if upstream < config.conflict_angle or upstream > 2.0 * math.pi - 0.15:
            return True
    return False


def fork_paths(config: ScenarioConfig, approach: float = 200.0) -> Tuple[ReferencePath, ReferencePath]:
    """Left and right branch centrelines; the fork point is the origin."""
    Rb, alpha = config.branch_radius, config.branch_angle
    stem = Line((-approach, 0.0), 0.0, approach)
    left_arc = Arc((0.0, Rb), Rb, -math.pi / 2, alpha)
    right_arc = Arc((0.0, -Rb), Rb, math.pi / 2, -alpha)
    left = ReferencePath([stem, left_arc, Line(left_arc.end, left_arc.end_heading, 120.0)])
    right = ReferencePath([stem, right_arc, Line(right_arc.end, right_arc.end_heading, 120.0)])
    return left, right


def _fork_scene(config: ScenarioConfig, rng: np.random.Generator) -> List[SimulatedAgent]:
    dt = config.dt
    steps = config.frames + 2
    approach = 200.0
    left, right = fork_paths(config, approach)
    count = int(rng.integers(config.min_agents, config.max_agents + 1))
    base_speed = rng.uniform(*config.speed_range)
    # the lead agent is shortly before the fork three seconds in
    x_at_three = -rng.uniform(3.0, 20.0)
    agents = []
    for k in range(count):
        speed = base_speed + rng.uniform(-0.5, 0.5)
        s0 = approach + x_at_three - 3.0 * speed
        path = left if rng.random() < config.left_probability else right
        positions = np.array([path.position(s0 + speed * k_step * dt) for k_step in range(steps)])
        agents.append(SimulatedAgent(positions, AgentCategory.CAR, 0.0))
        x_at_three -= rng.uniform(18.0, 28.0)
    return agents


SCENE_BUILDERS = {
    'highway': _highway_scene,
    'roundabout': _roundabout_scene,
    'fork': _fork_scene,
}


def kinematics(positions: np.ndarray, dt: float, initial_heading: float = 0.0) -> np.ndarray:
    """
    (frames, 7) x, y, vx, vy, ax, ay, psi from frames + 2 positions.

    Velocities and accelerations are forward differences; the yaw follows the
    velocity and is held while the agent stands still.
    """
    velocity = np.diff(positions, axis=0) / dt
    acceleration = np.diff(velocity, axis=0) / dt
    frames = len(positions) - 2
    speed = np.linalg.norm(velocity[:frames], axis=1)
    psi = np.empty(frames)
    heading = math.atan2(math.sin(initial_heading), math.cos(initial_heading))
    for k in range(frames):
        if speed[k] > 0.05:
            heading = math.atan2(velocity[k, 1], velocity[k, 0])
        psi[k] = math.pi if heading == -math.pi else heading
    return np.column_stack([positions[:frames], velocity[:frames], acceleration[:frames], psi])


def generate_synthetic(
    kind: str,
    n_scenes: int,
    seed: int = 0,
    config: Optional[ScenarioConfig] = None,
    **overrides,
) -> TrajectoryTable:
    """
    Generate a table of independent synthetic scenes.

    Args:
        kind: 'highway', 'roundabout' or 'fork'
        n_scenes: Number of scenes (0 gives an empty table)
        seed: Seed; equal seeds give identical tables
        config: Scenario parameters (defaults to the preset of ``kind``)
        **overrides: Field overrides applied to the config

    Returns:
        TrajectoryTable at the config's recording rate
    """
    if kind not in SCENARIO_KINDS:
        raise ValueError(f"Unknown scenario kind {kind!r}; expected one of {SCENARIO_KINDS}")
    if n_scenes < 0:
        raise ValueError(f"Scene count must be nonnegative, got {n_scenes}")
    config = config or SCENARIO_CONFIGS[kind]
    if overrides:
        config = replace(config, **overrides)
    geometry = config.geometry()
    if n_scenes == 0:
        return TrajectoryTable.empty(geometry, f"{kind}-{seed}")

    builder = SCENE_BUILDERS[kind]
    streams = np.random.SeedSequence(seed).spawn(n_scenes)
    blocks = []
    for scene, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        for k, agent in enumerate(builder(config, rng)):
            states = kinematics(agent.positions, config.dt, agent.initial_heading)
            block = pd.DataFrame(states, columns=['x', 'y', 'vx', 'vy', 'ax', 'ay', 'psi'])
            block.insert(0, 'agent_id', scene * AGENT_ID_STRIDE + k)
            block.insert(0, 'frame', scene * SCENE_FRAME_OFFSET + np.arange(config.frames))
            block['category'] = agent.category.label
            blocks.append(block)
    rows = pd.concat(blocks, ignore_index=True).loc[:, list(COLUMNS)]
    rows = rows.sort_values(['agent_id', 'frame'], kind='stable').reset_index(drop=True)
    table = TrajectoryTable(rows, geometry, 1, f"{kind}-{seed}")
    logger.info("generated %d %s scene(s): %s", n_scenes, kind, table.summary())
    return table
