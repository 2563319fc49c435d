"""Trajectory tables, synthetic scenes, windowing and splits."""
from .table import (
    COLUMNS,
    REQUIRED_COLUMNS,
    SceneGeometry,
    TrajectoryTable,
    derive_kinematics,
    downsample,
    ingest_csv,
    load_geometry,
    save_geometry,
    write_csv,
)
from .paths import Arc, Line, ReferencePath
from .synthetic import (
    AGENT_ID_STRIDE,
    SCENARIO_CONFIGS,
    SCENARIO_KINDS,
    SCENE_FRAME_OFFSET,
    DriverParams,
    ScenarioConfig,
    fork_paths,
    generate_synthetic,
    idm_acceleration,
    kinematics,
)
from .windowing import (
    DEFAULT_HISTORY,
    DEFAULT_HORIZON,
    DEFAULT_STRIDE,
    CenterPolicy,
    contiguous_runs,
    unwindow,
    window_lengths,
    window_scenes,
)
from .split import SplitSpec, split

__all__ = [
    'COLUMNS',
    'REQUIRED_COLUMNS',
    'SceneGeometry',
    'TrajectoryTable',
    'derive_kinematics',
    'downsample',
    'ingest_csv',
    'load_geometry',
    'save_geometry',
    'write_csv',
    'Arc',
    'Line',
    'ReferencePath',
    'AGENT_ID_STRIDE',
    'SCENARIO_CONFIGS',
    'SCENARIO_KINDS',
    'SCENE_FRAME_OFFSET',
    'DriverParams',
    'ScenarioConfig',
    'fork_paths',
    'generate_synthetic',
    'idm_acceleration',
    'kinematics',
    'DEFAULT_HISTORY',
    'DEFAULT_HORIZON',
    'DEFAULT_STRIDE',
    'CenterPolicy',
    'contiguous_runs',
    'unwindow',
    'window_lengths',
    'window_scenes',
    'SplitSpec',
    'split',
]
