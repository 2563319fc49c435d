"""
Trajectory tables: CSV ingestion, geometry sidecars and downsampling.

CSV format (comma separated, header mandatory, SI units):

    frame,agent_id,x,y,vx,vy,ax,ay,psi,category

``frame``, ``agent_id``, ``x`` and ``y`` are required. The remaining columns
may be left out or left empty; missing velocities, accelerations and yaw
angles are derived per agent by finite differences, a missing category
defaults to ``car``.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
import yaml

from ..core.errors import DataFormatError
from ..scenes import AgentCategory, SceneKind, wrap_angle

logger = logging.getLogger(__name__)

COLUMNS = ('frame', 'agent_id', 'x', 'y', 'vx', 'vy', 'ax', 'ay', 'psi', 'category')
REQUIRED_COLUMNS = ('frame', 'agent_id', 'x', 'y')
DERIVABLE_COLUMNS = ('vx', 'vy', 'ax', 'ay', 'psi')
DEFAULT_CATEGORY = AgentCategory.CAR

PathLike = Union[str, Path]


@dataclass(frozen=True)
class SceneGeometry:
    """
    Road layout of a recording: lane dividers for highways, the junction
    origin otherwise.
    """
    kind: SceneKind
    rate_hz: float
    lane_lines: Tuple[float, ...] = ()
    origin: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.rate_hz <= 0:
            raise DataFormatError(f"Recording rate must be positive, got {self.rate_hz}")
        if self.kind == SceneKind.HIGHWAY and len(self.lane_lines) < 2:
            raise DataFormatError("Highway geometry needs at least two lane dividers")

    @classmethod
    def highway(cls, lane_lines, rate_hz: float = 25.0) -> 'SceneGeometry':
        return cls(SceneKind.HIGHWAY, rate_hz, lane_lines=tuple(sorted(float(y) for y in lane_lines)))

    @classmethod
    def junction(cls, origin=(0.0, 0.0), rate_hz: float = 25.0) -> 'SceneGeometry':
        return cls(SceneKind.JUNCTION, rate_hz, origin=(float(origin[0]), float(origin[1])))

    def as_dict(self) -> dict:
        data = {'kind': str(self.kind), 'rate_hz': float(self.rate_hz)}
        if self.kind == SceneKind.HIGHWAY:
            data['lane_lines'] = [float(y) for y in self.lane_lines]
        else:
            data['origin'] = [float(v) for v in self.origin]
        return data


def load_geometry(path: PathLike) -> SceneGeometry:
    """
    Read a YAML geometry sidecar.

    Raises:
        DataFormatError: If the file is not a mapping with a known kind
    """
    with open(path) as handle:
        data = yaml.safe_load(handle)
    if not isinstance(data, dict) or 'kind' not in data:
        raise DataFormatError(f"{path}: geometry must be a mapping with a 'kind' entry")
    unknown = set(data) - {'kind', 'rate_hz', 'lane_lines', 'origin'}
    if unknown:
        raise DataFormatError(f"{path}: unknown geometry keys {sorted(unknown)}")
    try:
        kind = SceneKind(str(data['kind']))
    except ValueError as exc:
        raise DataFormatError(f"{path}: unknown scene kind {data['kind']!r}") from exc
    rate = float(data.get('rate_hz', 25.0))
    if kind == SceneKind.HIGHWAY:
        return SceneGeometry.highway(data.get('lane_lines') or [], rate)
    origin = data.get('origin', [0.0, 0.0])
    if not isinstance(origin, (list, tuple)) or len(origin) != 2:
        raise DataFormatError(f"{path}: origin must be a pair of numbers")
    return SceneGeometry.junction(origin, rate)


def save_geometry(geometry: SceneGeometry, path: PathLike):
    with open(path, 'w') as handle:
        yaml.safe_dump(geometry.as_dict(), handle, sort_keys=False)


@dataclass
class TrajectoryTable:
    """
    Agent states per frame, sorted by (agent_id, frame).

    ``frame_step`` is the frame spacing of the (possibly downsampled) grid,
    so the sample time is frame_step / rate_hz.
    """
    rows: pd.DataFrame
    geometry: SceneGeometry
    frame_step: int = 1
    name: str = field(default="")

    @classmethod
    def empty(cls, geometry: SceneGeometry, name: str = "") -> 'TrajectoryTable':
        return cls(_empty_rows(), geometry, 1, name)

    @property
    def rate_hz(self) -> float:
        return self.geometry.rate_hz

    @property
    def kind(self) -> SceneKind:
        return self.geometry.kind

    @property
    def sample_time(self) -> float:
        return self.frame_step / self.rate_hz

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def agents(self) -> np.ndarray:
        return np.unique(self.rows['agent_id'].to_numpy())

    def frames(self) -> np.ndarray:
        return np.unique(self.rows['frame'].to_numpy())

    def track(self, agent_id: int) -> pd.DataFrame:
        return self.rows[self.rows['agent_id'] == agent_id]

    def validate(self):
        """Frames strictly increasing per agent, unique (frame, agent) pairs."""
        if self.rows.duplicated(['frame', 'agent_id']).any():
            raise DataFormatError("Duplicate (frame, agent_id) rows")
        for agent, frames in self.rows.groupby('agent_id')['frame']:
            if not np.all(np.diff(frames.to_numpy()) > 0):
                raise DataFormatError(f"Frames of agent {agent} are not increasing")

    def summary(self) -> str:
        return (
            f"{self.name or 'table'}: {self.num_rows} rows, {len(self.agents())} agents, "
            f"{self.kind} geometry, T_s={self.sample_time:g}s"
        )


def _empty_rows() -> pd.DataFrame:
    frame = pd.DataFrame({column: pd.Series(dtype=np.float64) for column in COLUMNS})
    frame['frame'] = frame['frame'].astype(np.int64)
    frame['agent_id'] = frame['agent_id'].astype(np.int64)
    frame['category'] = frame['category'].astype(object)
    return frame


def _parse_number(value: str, column: str, line: int, integer: bool = False) -> float:
    try:
        number = float(value)
    except ValueError:
        raise DataFormatError(f"line {line}: column {column} is not a number: {value!r}") from None
    if not math.isfinite(number):
        raise DataFormatError(f"line {line}: column {column} is not finite: {value!r}")
    if integer:
        if number != int(number):
            raise DataFormatError(f"line {line}: column {column} must be an integer, got {value!r}")
        return int(number)
    return number


def derive_kinematics(rows: pd.DataFrame, rate_hz: float, missing: pd.DataFrame) -> pd.DataFrame:
    """
    Fill missing kinematic cells of each agent from its positions.

    Velocities are the finite-difference derivative of position, accelerations
    that of velocity, yaw the heading of the velocity. A single-row agent gets
    zero velocity and acceleration.
    """
    rows = rows.copy()
    for _, index in rows.groupby('agent_id').groups.items():
        track = rows.loc[index]
        t = track['frame'].to_numpy(dtype=np.float64) / rate_hz
        if len(track) >= 2:
            vx = np.gradient(track['x'].to_numpy(), t)
            vy = np.gradient(track['y'].to_numpy(), t)
        else:
            vx = vy = np.zeros(1)
        derived = {'vx': vx, 'vy': vy}
        known_vx = np.where(missing.loc[index, 'vx'], vx, track['vx'].to_numpy())
        known_vy = np.where(missing.loc[index, 'vy'], vy, track['vy'].to_numpy())
        if len(track) >= 2:
            derived['ax'] = np.gradient(known_vx, t)
            derived['ay'] = np.gradient(known_vy, t)
        else:
            derived['ax'] = derived['ay'] = np.zeros(1)
        derived['psi'] = np.arctan2(known_vy, known_vx)
        for column, values in derived.items():
            holes = missing.loc[index, column].to_numpy()
            if holes.any():
                rows.loc[index[holes], column] = values[holes]
    return rows


def ingest_csv(path: PathLike, geometry: Union[SceneGeometry, PathLike]) -> TrajectoryTable:
    """
    Read and validate a trajectory CSV.

    Args:
        path: CSV file in the documented format
        geometry: SceneGeometry or the path of its YAML sidecar

    Returns:
        TrajectoryTable sorted by (agent_id, frame); empty for an empty file

    Raises:
        DataFormatError: On a malformed header or row (1-based line numbers),
            duplicate (frame, agent_id) pairs, or frames that do not increase
            per agent in file order
    """
    if not isinstance(geometry, SceneGeometry):
        geometry = load_geometry(geometry)
    name = Path(path).stem
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        logger.info("%s is empty", path)
        return TrajectoryTable.empty(geometry, name)

    header = [column.strip() for column in raw.columns]
    unknown = [column for column in header if column not in COLUMNS]
    if unknown:
        raise DataFormatError(f"line 1: unknown columns {unknown}; expected a subset of {list(COLUMNS)}")
    if tuple(header[:len(REQUIRED_COLUMNS)]) != REQUIRED_COLUMNS:
        raise DataFormatError(f"line 1: header must start with {','.join(REQUIRED_COLUMNS)}")
    if len(set(header)) != len(header):
        raise DataFormatError("line 1: repeated column names")
    raw.columns = header
    if raw.empty:
        return TrajectoryTable.empty(geometry, name)

    records = {column: [] for column in COLUMNS}
    missing = {column: [] for column in DERIVABLE_COLUMNS}
    last_frame = {}
    seen = set()
    for offset, row in enumerate(raw.itertuples(index=False)):
        line = offset + 2
        cells = dict(zip(header, row))
        for column in REQUIRED_COLUMNS:
            if cells[column].strip() == "":
                raise DataFormatError(f"line {line}: column {column} is empty")
        frame = _parse_number(cells['frame'], 'frame', line, integer=True)
        agent = _parse_number(cells['agent_id'], 'agent_id', line, integer=True)
        if (frame, agent) in seen:
            raise DataFormatError(f"line {line}: duplicate row for agent {agent} at frame {frame}")
        if agent in last_frame and frame <= last_frame[agent]:
            raise DataFormatError(
                f"line {line}: frame {frame} of agent {agent} does not follow frame {last_frame[agent]}"
            )
        seen.add((frame, agent))
        last_frame[agent] = frame
        records['frame'].append(frame)
        records['agent_id'].append(agent)
        records['x'].append(_parse_number(cells['x'], 'x', line))
        records['y'].append(_parse_number(cells['y'], 'y', line))
        for column in DERIVABLE_COLUMNS:
            value = cells.get(column, "").strip()
            missing[column].append(value == "")
            records[column].append(math.nan if value == "" else _parse_number(value, column, line))
        label = cells.get('category', "").strip()
        try:
            category = AgentCategory.from_label(label) if label else DEFAULT_CATEGORY
        except ValueError as exc:
            raise DataFormatError(f"line {line}: {exc}") from None
        records['category'].append(category.label)

    rows = pd.DataFrame(records, columns=list(COLUMNS))
    holes = pd.DataFrame(missing)
    if holes.to_numpy().any():
        logger.info("%s: deriving %d missing kinematic cells", path, int(holes.to_numpy().sum()))
        rows = derive_kinematics(rows, geometry.rate_hz, holes)
    rows['psi'] = [wrap_angle(v) for v in rows['psi']]
    rows = rows.sort_values(['agent_id', 'frame'], kind='stable').reset_index(drop=True)
    table = TrajectoryTable(rows, geometry, 1, name)
    logger.info("ingested %s", table.summary())
    return table


def write_csv(table: TrajectoryTable, path: PathLike):
    """Write the table in the canonical column order."""
    table.rows.loc[:, list(COLUMNS)].to_csv(path, index=False)


def downsample(table: TrajectoryTable, factor: int) -> TrajectoryTable:
    """
    Keep every ``factor``-th frame, counted from the first frame.

    The recording rate is unchanged; the sample time grows to factor / rate.
    """
    if factor < 1:
        raise ValueError(f"Downsampling factor must be at least 1, got {factor}")
    if factor == 1 or table.num_rows == 0:
        return replace(table, frame_step=table.frame_step * factor)
    first = int(table.rows['frame'].min())
    keep = (table.rows['frame'] - first) % (table.frame_step * factor) == 0
    rows = table.rows[keep].reset_index(drop=True)
    return replace(table, rows=rows, frame_step=table.frame_step * factor)
