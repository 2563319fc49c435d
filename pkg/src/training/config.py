"""
Training configuration and the ablation switches.
"""
import logging
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional, Tuple

import torch

from ..core.errors import ConfigurationError
from ..gnn import GnnKind
from ..motion import MotionOrder

logger = logging.getLogger(__name__)

PRECISIONS = {'float64': torch.float64, 'float32': torch.float32}


@dataclass
class TrainConfig:
    """
    Every knob of model construction and training.

    ``use_ekf`` left at None follows ``use_ode``.
    """
    epochs: int = 40
    batch_size: int = 128
    learning_rate: float = 3e-4
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    grad_clip: float = 10.0

    hidden: int = 32
    gnn_kind: str = "gatplus"
    gnn_heads: int = 1
    gnn_layers: int = 2
    gnn_hidden: Optional[int] = None
    leaky_slope: float = 0.01

    motion_order: int = 2
    ode_hidden: int = 16
    ode_layers: int = 2
    components: int = 8

    sample_time: float = 0.2
    history: float = 3.0
    horizon: float = 5.0
    seed: int = 0

    use_encoder_gnn: bool = True
    use_decoder_gnn: bool = True
    use_ekf: Optional[bool] = None
    use_ode: bool = True
    use_static: bool = True

    huber_delta: float = 1.0
    sigma_e_init: float = 10.0
    covariance_floor: float = 1e-4
    precision: str = "float64"
    standardize: bool = True
    progress: bool = True

    def __post_init__(self):
        self.betas = tuple(self.betas)
        if self.epochs < 8:
            raise ConfigurationError(f"epochs must be at least 8 for the loss schedule, got {self.epochs}")
        if self.components < 1:
            raise ConfigurationError(f"components must be at least 1, got {self.components}")
        for name in ('batch_size', 'hidden', 'gnn_heads', 'gnn_layers', 'ode_hidden', 'ode_layers'):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be at least 1, got {getattr(self, name)}")
        for name in ('learning_rate', 'eps', 'grad_clip', 'sample_time', 'horizon', 'huber_delta',
                     'sigma_e_init', 'covariance_floor'):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.history < 0:
            raise ConfigurationError(f"history must be nonnegative, got {self.history}")
        if len(self.betas) != 2 or not all(0 <= b < 1 for b in self.betas):
            raise ConfigurationError(f"betas must be two values in [0, 1), got {self.betas}")
        if self.precision not in PRECISIONS:
            raise ConfigurationError(f"precision must be one of {sorted(PRECISIONS)}, got {self.precision!r}")
        try:
            GnnKind(self.gnn_kind)
            MotionOrder.from_int(self.motion_order)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        if self.use_ekf and not self.use_ode:
            raise ConfigurationError("use_ekf requires use_ode: the EKF propagates through the learned motion model")

    @property
    def ekf_enabled(self) -> bool:
        return self.use_ode if self.use_ekf is None else bool(self.use_ekf)

    @property
    def dtype(self) -> torch.dtype:
        return PRECISIONS[self.precision]

    @property
    def order(self) -> MotionOrder:
        return MotionOrder.from_int(self.motion_order)

    @property
    def kind(self) -> GnnKind:
        return GnnKind(self.gnn_kind)

    @property
    def history_slots(self) -> int:
        return int(round(self.history / self.sample_time)) + 1

    @property
    def horizon_steps(self) -> int:
        return int(round(self.horizon / self.sample_time))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['betas'] = list(self.betas)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrainConfig':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown training options: {sorted(unknown)}")
        return cls(**data)

    def get_summary(self) -> str:
        flags = ", ".join(f"{name}={value}" for name, value in ablation_flags(self).items())
        return (
            f"{self.kind.value} d_h={self.hidden} M={self.components} order={self.motion_order} "
            f"T={self.epochs} batch={self.batch_size} lr={self.learning_rate:g} [{flags}]"
        )


def ablation_flags(config: TrainConfig) -> Dict[str, bool]:
    """The five switches with use_ekf resolved."""
    return {
        'use_encoder_gnn': config.use_encoder_gnn,
        'use_decoder_gnn': config.use_decoder_gnn,
        'use_ekf': config.ekf_enabled,
        'use_ode': config.use_ode,
        'use_static': config.use_static,
    }


def ablate(config: TrainConfig, **flags) -> TrainConfig:
    """
    Effective configuration of an ablated model.

    Flags override the config; use_ekf is resolved so the result states
    every switch explicitly.

    Raises:
        ConfigurationError: For unknown flags or use_ekf without use_ode
    """
    unknown = set(flags) - set(ablation_flags(config))
    if unknown:
        raise ConfigurationError(f"Unknown ablation flags: {sorted(unknown)}")
    if 'use_ode' in flags and 'use_ekf' not in flags:
        flags['use_ekf'] = None
    candidate = replace(config, **flags)
    effective = replace(candidate, use_ekf=candidate.ekf_enabled)
    logger.debug("ablation %s", ablation_flags(effective))
    return effective
