"""
Model checkpoints: parameters, buffers, configuration and training state.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import torch

from ..core.errors import DataFormatError
from ..core.params import ParameterSet, load_parameters, save_parameters
from .config import TrainConfig
from .model import Forecaster

logger = logging.getLogger(__name__)


@dataclass
class Checkpoint:
    """Everything needed to rebuild a forecaster and resume its bookkeeping."""
    config: TrainConfig
    state: Dict[str, torch.Tensor]
    epoch: int = 0
    history: List[dict] = field(default_factory=list)
    seed: int = 0
    rng_state: Optional[torch.Tensor] = None

    @classmethod
    def capture(cls, model: Forecaster, epoch: int, history: List[dict]) -> 'Checkpoint':
        state = {name: t.detach().clone() for name, t in model.state_dict().items()}
        return cls(model.config, state, epoch, [dict(r) for r in history], model.config.seed, torch.get_rng_state())

    @property
    def parameters(self) -> ParameterSet:
        return self.build().parameter_set()

    def build(self) -> Forecaster:
        """A forecaster holding this checkpoint's tensors."""
        model = Forecaster(self.config)
        model.load_state_dict(self.state)
        return model

    def save(self, path: Union[str, Path]):
        metadata = {
            'config': self.config.to_dict(),
            'epoch': self.epoch,
            'history': self.history,
            'seed': self.seed,
        }
        state = dict(self.state)
        if self.rng_state is not None:
            state['_rng_state'] = self.rng_state
        save_parameters(path, state, metadata)
        logger.info("saved checkpoint (epoch %d) to %s", self.epoch, path)

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'Checkpoint':
        """
        Raises:
            DataFormatError: If the file is not a forecaster checkpoint
        """
        tensors, metadata = load_parameters(path)
        if 'config' not in metadata:
            raise DataFormatError(f"{path} holds no model configuration")
        rng_state = tensors.pop('_rng_state', None)
        config = TrainConfig.from_dict(metadata['config'])
        return cls(
            config=config,
            state=dict(tensors),
            epoch=int(metadata.get('epoch', 0)),
            history=list(metadata.get('history', [])),
            seed=int(metadata.get('seed', config.seed)),
            rng_state=rng_state,
        )
