"""Model wiring, training loop, checkpoints and evaluation."""
from .config import PRECISIONS, TrainConfig, ablate, ablation_flags
from .model import Forecaster
from .predictors import (
    BASELINES,
    ConstantAccelerationPredictor,
    ConstantVelocityPredictor,
    ModelPredictor,
    Predictor,
    baseline,
)
from .checkpoint import Checkpoint
from .trainer import EpochRecord, TrainingResult, chunk_scenes, train, validation_nll
from .evaluate import AblationResult, ablation_study, as_predictor, evaluate
from .gradcheck import TINY_CONFIG, run_gradcheck, tiny_scene

__all__ = [
    'PRECISIONS',
    'TrainConfig',
    'ablate',
    'ablation_flags',
    'Forecaster',
    'BASELINES',
    'ConstantAccelerationPredictor',
    'ConstantVelocityPredictor',
    'ModelPredictor',
    'Predictor',
    'baseline',
    'Checkpoint',
    'EpochRecord',
    'TrainingResult',
    'chunk_scenes',
    'train',
    'validation_nll',
    'AblationResult',
    'ablation_study',
    'as_predictor',
    'evaluate',
    'TINY_CONFIG',
    'run_gradcheck',
    'tiny_scene',
]
