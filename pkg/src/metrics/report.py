"""
Metric aggregation over scenes, with confidence intervals and file output.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd
import yaml

from ..scenes import AgentCategory
from .displacement import MISS_THRESHOLD, ade, apde, fde
from .likelihood import mean_ci

logger = logging.getLogger(__name__)

METRIC_NAMES = ('ade', 'fde', 'mr', 'apde', 'anll', 'fnll')


class EvaluationScope(Enum):
    """Which agents of a scene enter the metrics."""
    ALL = "all"
    CENTER = "center"

    def __str__(self):
        return self.value


def agent_metrics(pred, truth, nll_steps: Optional[np.ndarray] = None) -> Dict[str, np.ndarray]:
    """
    Per-agent metric values.

    Args:
        pred: (n, t_f, 2) positions of the most likely component
        truth: (n, t_f, 2) true positions
        nll_steps: Optional (n, t_f) per-step NLL

    Returns:
        Mapping of metric name to (n,) values (mr holds 0/1 misses)
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    final = fde(pred, truth)
    if nll_steps is None:
        nll_steps = np.full(pred.shape[:2], np.nan)
    return {
        'ade': ade(pred, truth),
        'fde': final,
        'mr': (final > MISS_THRESHOLD).astype(np.float64),
        'apde': apde(pred, truth),
        'anll': nll_steps.mean(axis=-1),
        'fnll': nll_steps[:, -1],
    }


@dataclass
class SceneMetrics:
    """Metric values of one scene, averaged over its evaluated agents."""
    name: str
    agents: int
    values: Dict[str, float]

    def as_row(self) -> dict:
        return {'scene': self.name, 'agents': self.agents, **self.values}


@dataclass
class MetricsReport:
    """
    Per-scene metric values plus their mean and 95% CI half-width.

    Scenes are recorded one at a time; per-category ADE and FDE are
    accumulated over agents.
    """
    scope: EvaluationScope = EvaluationScope.ALL
    predictor: str = "model"
    scenes: List[SceneMetrics] = field(default_factory=list)
    _category_values: Dict[str, Dict[str, List[float]]] = field(default_factory=dict, init=False, repr=False)

    def record_scene(self, name: str, metrics: Dict[str, np.ndarray], categories: Optional[np.ndarray] = None):
        """
        Add one scene.

        Args:
            name: Scene label
            metrics: Output of ``agent_metrics`` for the evaluated agents
            categories: Optional (n,) category indices of those agents
        """
        count = len(metrics['ade'])
        if count == 0:
            logger.debug("scene %s has no evaluable agents; skipped", name)
            return
        values = {key: float(np.mean(metrics[key])) for key in METRIC_NAMES}
        self.scenes.append(SceneMetrics(name, count, values))
        if categories is None:
            return
        for index, category in enumerate(np.asarray(categories).tolist()):
            label = AgentCategory.from_index(int(category)).label
            bucket = self._category_values.setdefault(label, {'ade': [], 'fde': []})
            bucket['ade'].append(float(metrics['ade'][index]))
            bucket['fde'].append(float(metrics['fde'][index]))

    @property
    def num_scenes(self) -> int:
        return len(self.scenes)

    def values(self, metric: str) -> np.ndarray:
        if metric not in METRIC_NAMES:
            raise ValueError(f"Unknown metric {metric!r}; expected one of {METRIC_NAMES}")
        return np.array([scene.values[metric] for scene in self.scenes], dtype=np.float64)

    def aggregate(self, metric: str) -> Dict[str, float]:
        """Mean and half-width; the half-width is NaN with fewer than two scenes."""
        values = self.values(metric)
        if values.size == 0 or np.all(np.isnan(values)):
            return {'mean': math.nan, 'ci95': math.nan}
        if values.size < 2:
            return {'mean': float(values[0]), 'ci95': math.nan}
        mean, half = mean_ci(values)
        return {'mean': mean, 'ci95': half}

    def per_category(self) -> Dict[str, Dict[str, float]]:
        breakdown = {}
        for label, bucket in sorted(self._category_values.items()):
            breakdown[label] = {
                'agents': len(bucket['ade']),
                'ade': float(np.mean(bucket['ade'])),
                'fde': float(np.mean(bucket['fde'])),
            }
        return breakdown

    def summary(self) -> dict:
        return {
            'predictor': self.predictor,
            'scope': str(self.scope),
            'scenes': self.num_scenes,
            'agents': int(sum(scene.agents for scene in self.scenes)),
            'metrics': {metric: self.aggregate(metric) for metric in METRIC_NAMES},
            'per_category': self.per_category(),
        }

    def get_summary(self) -> str:
        """Human-readable table of the aggregates."""
        lines = [f"{self.predictor} on {self.num_scenes} scene(s), scope {self.scope}"]
        for metric in METRIC_NAMES:
            agg = self.aggregate(metric)
            if math.isnan(agg['mean']):
                lines.append(f"  {metric.upper():5s} n/a")
            elif math.isnan(agg['ci95']):
                lines.append(f"  {metric.upper():5s} {agg['mean']:.4f}")
            else:
                lines.append(f"  {metric.upper():5s} {agg['mean']:.4f} ± {agg['ci95']:.4f}")
        for label, row in self.per_category().items():
            lines.append(f"  {label}: ADE {row['ade']:.4f}, FDE {row['fde']:.4f} ({row['agents']} agents)")
        return "\n".join(lines)

    def to_frame(self) -> pd.DataFrame:
        """One row per scene."""
        columns = ['scene', 'agents', *METRIC_NAMES]
        return pd.DataFrame([scene.as_row() for scene in self.scenes], columns=columns)

    def write(self, directory: Union[str, Path], stem: str = "metrics") -> Dict[str, Path]:
        """Write ``<stem>.yaml`` (aggregates) and ``<stem>.csv`` (per scene)."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        yaml_path = directory / f"{stem}.yaml"
        csv_path = directory / f"{stem}.csv"
        with open(yaml_path, 'w') as handle:
            yaml.safe_dump(self.summary(), handle, sort_keys=False)
        self.to_frame().to_csv(csv_path, index=False)
        logger.info("wrote %s and %s", yaml_path, csv_path)
        return {'yaml': yaml_path, 'csv': csv_path}
