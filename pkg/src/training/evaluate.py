"""
Evaluation of trained models and baselines, and multi-seed ablation studies.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import torch

from ..metrics import METRIC_NAMES, EvaluationScope, MetricsReport, agent_metrics, mean_ci, nll_per_step
from ..scenes import SceneSequence, collate
from .checkpoint import Checkpoint
from .config import TrainConfig, ablate, ablation_flags
from .model import Forecaster
from .predictors import ModelPredictor, Predictor
from .trainer import chunk_scenes, train

logger = logging.getLogger(__name__)

PredictorSource = Union[Checkpoint, Forecaster, Predictor]


def as_predictor(source: PredictorSource) -> Tuple[Predictor, torch.dtype]:
    if isinstance(source, Checkpoint):
        return ModelPredictor(source.build()), source.config.dtype
    if isinstance(source, Forecaster):
        return ModelPredictor(source), source.config.dtype
    if isinstance(source, Predictor):
        return source, torch.float64
    raise TypeError(f"Cannot predict with {type(source).__name__}")


def evaluate(
    source: PredictorSource,
    scenes: Sequence[SceneSequence],
    scope: EvaluationScope = EvaluationScope.ALL,
    batch_size: int = 128,
) -> MetricsReport:
    """
    Metrics of a predictor on scenes, decoded without teacher forcing.

    Positions come from the most likely component. Only agents with a full
    future are scored; with the CENTER scope only the graph-centred agent.
    """
    predictor, dtype = as_predictor(source)
    report = MetricsReport(scope, predictor.name)
    for chunk in chunk_scenes(scenes, batch_size):
        batch = collate(chunk, dtype)
        forecast = predictor.predict(batch)
        predicted = forecast.most_likely_positions().double().cpu().numpy()
        truth = batch.future[..., :2].double().cpu().numpy()
        nll = nll_per_step(forecast, batch.future)
        selected = batch.future_valid
        if scope == EvaluationScope.CENTER:
            selected = selected & batch.center_mask
        for index, scene in enumerate(chunk):
            rows = (selected & (batch.scene_index == index)).cpu().numpy()
            metrics = agent_metrics(predicted[rows], truth[rows], nll[rows])
            report.record_scene(scene.name, metrics, batch.categories.cpu().numpy()[rows])
    logger.info("evaluated %s on %d scene(s)", predictor.name, report.num_scenes)
    return report


@dataclass
class AblationResult:
    """Per-seed reports of one flag combination and their mean ± 95% CI."""
    flags: Dict[str, bool]
    seeds: List[int]
    reports: List[MetricsReport] = field(default_factory=list)

    def metric_values(self, metric: str) -> np.ndarray:
        return np.array([report.aggregate(metric)['mean'] for report in self.reports], dtype=np.float64)

    def aggregate(self, metric: str) -> Dict[str, float]:
        values = self.metric_values(metric)
        values = values[~np.isnan(values)]
        if values.size == 0:
            return {'mean': math.nan, 'ci95': math.nan}
        if values.size < 2:
            return {'mean': float(values[0]), 'ci95': math.nan}
        mean, half = mean_ci(values)
        return {'mean': mean, 'ci95': half}

    def summary(self) -> dict:
        return {
            'flags': dict(self.flags),
            'seeds': list(self.seeds),
            'metrics': {metric: self.aggregate(metric) for metric in METRIC_NAMES},
        }

    def get_summary(self) -> str:
        switched = ", ".join(f"{k}={v}" for k, v in self.flags.items())
        lines = [f"Ablation [{switched}] over seeds {self.seeds}"]
        for metric in METRIC_NAMES:
            agg = self.aggregate(metric)
            if math.isnan(agg['mean']):
                lines.append(f"  {metric.upper():5s} n/a")
            else:
                lines.append(f"  {metric.upper():5s} {agg['mean']:.4f} ± {agg['ci95']:.4f}")
        return "\n".join(lines)


def ablation_study(
    config: TrainConfig,
    train_scenes: Sequence[SceneSequence],
    val_scenes: Sequence[SceneSequence],
    test_scenes: Sequence[SceneSequence],
    seeds: Sequence[int] = (0, 1, 2),
    scope: EvaluationScope = EvaluationScope.ALL,
    **flags,
) -> AblationResult:
    """
    Train and test one model per seed for a flag combination.

    Args:
        config: Base configuration
        seeds: Training seeds; two or more give confidence intervals
        **flags: Ablation switches (use_encoder_gnn, use_decoder_gnn,
            use_ekf, use_ode, use_static)
    """
    if not seeds:
        raise ValueError("An ablation study needs at least one seed")
    effective = ablate(config, **flags)
    result = AblationResult(ablation_flags(effective), [int(s) for s in seeds])
    for seed in result.seeds:
        outcome = train(replace(effective, seed=seed), train_scenes, val_scenes)
        result.reports.append(evaluate(outcome.checkpoint, test_scenes, scope))
        logger.info("seed %d: ADE %.4f", seed, result.reports[-1].aggregate('ade')['mean'])
    return result
