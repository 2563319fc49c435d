"""
Command-line configuration: one YAML file plus flag overrides.
"""
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from ..core.errors import ConfigurationError
from ..data import DEFAULT_STRIDE, SplitSpec
from ..metrics import EvaluationScope
from ..training import TrainConfig

logger = logging.getLogger(__name__)

VERBOSITY_LEVELS = {'debug': logging.DEBUG, 'info': logging.INFO, 'warning': logging.WARNING}


@dataclass
class CliConfig:
    """
    Paths and pipeline options of the subcommands plus the training options.

    Keys of the YAML file are the field names below and the TrainConfig
    field names; anything else is rejected.
    """
    data: Optional[str] = None
    geometry: Optional[str] = None
    checkpoint: Optional[str] = None
    output_dir: str = "runs"
    baseline: Optional[str] = None
    scope: str = "all"
    split: str = "80/10/10"
    downsample: Optional[int] = None
    stride: int = DEFAULT_STRIDE
    center: str = "first"
    verbosity: str = "info"
    train: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.verbosity not in VERBOSITY_LEVELS:
            raise ConfigurationError(f"verbosity must be one of {sorted(VERBOSITY_LEVELS)}, got {self.verbosity!r}")
        try:
            EvaluationScope(self.scope)
        except ValueError:
            raise ConfigurationError(f"scope must be 'all' or 'center', got {self.scope!r}") from None
        if self.downsample is not None and self.downsample < 1:
            raise ConfigurationError(f"downsample must be at least 1, got {self.downsample}")
        if self.stride < 1:
            raise ConfigurationError(f"stride must be at least 1, got {self.stride}")
        try:
            SplitSpec.parse(self.split)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None

    @property
    def evaluation_scope(self) -> EvaluationScope:
        return EvaluationScope(self.scope)

    @property
    def split_spec(self) -> SplitSpec:
        return SplitSpec.parse(self.split)

    def train_config(self) -> TrainConfig:
        return TrainConfig.from_dict(self.train)

    def require(self, *names: str):
        missing = [name for name in names if getattr(self, name) in (None, "")]
        if missing:
            raise ConfigurationError(f"Missing required option(s): {', '.join(missing)}")


CLI_KEYS = tuple(f.name for f in fields(CliConfig) if f.name != 'train')
TRAIN_KEYS = tuple(f.name for f in fields(TrainConfig))


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Raises:
        ConfigurationError: If the file is not a YAML mapping
    """
    with open(path) as handle:
        data = yaml.safe_load(handle)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: configuration must be a mapping")
    return data


def build_config(file_values: Dict[str, Any], overrides: Dict[str, Any]) -> CliConfig:
    """
    Merge file values and flag overrides (flags win; None means "not given").

    Raises:
        ConfigurationError: For unknown keys or invalid values
    """
    merged = dict(file_values)
    merged.update({key: value for key, value in overrides.items() if value is not None})
    unknown = set(merged) - set(CLI_KEYS) - set(TRAIN_KEYS)
    if unknown:
        raise ConfigurationError(f"Unknown configuration keys: {sorted(unknown)}")
    cli = {key: merged[key] for key in CLI_KEYS if key in merged}
    train = {key: merged[key] for key in TRAIN_KEYS if key in merged}
    config = CliConfig(**cli, train=train)
    config.train_config()
    return config


def load_config(path: Optional[Union[str, Path]], overrides: Dict[str, Any]) -> CliConfig:
    values = read_config_file(path) if path else {}
    config = build_config(values, overrides)
    logger.debug("configuration: %s", config)
    return config
