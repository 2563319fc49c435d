"""Evaluation metrics and their aggregation."""
from .displacement import MISS_THRESHOLD, ade, apde, displacement, fde, miss_rate
from .likelihood import NORMAL_QUANTILE_95, T_QUANTILES_95, anll, fnll, mean_ci, nll_per_step, t_quantile
from .report import METRIC_NAMES, EvaluationScope, MetricsReport, SceneMetrics, agent_metrics

__all__ = [
    'MISS_THRESHOLD',
    'ade',
    'apde',
    'displacement',
    'fde',
    'miss_rate',
    'NORMAL_QUANTILE_95',
    'T_QUANTILES_95',
    'anll',
    'fnll',
    'mean_ci',
    'nll_per_step',
    't_quantile',
    'METRIC_NAMES',
    'EvaluationScope',
    'MetricsReport',
    'SceneMetrics',
    'agent_metrics',
]
