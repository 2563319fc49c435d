"""
Likelihood metrics of a mixture forecast and confidence intervals.
"""
import math
from typing import Sequence, Tuple

import numpy as np
import torch

from ..mixture import GmmForecast, step_nll

# two-sided 95% Student-t quantiles by degrees of freedom
T_QUANTILES_95 = {
    1: 12.71, 2: 4.30, 3: 3.18, 4: 2.78, 5: 2.57, 6: 2.45, 7: 2.36, 8: 2.31,
    9: 2.26, 10: 2.23, 11: 2.20, 12: 2.18, 13: 2.16, 14: 2.14, 15: 2.13,
    16: 2.12, 17: 2.11, 18: 2.10, 19: 2.09, 20: 2.09, 21: 2.08, 22: 2.07,
    23: 2.07, 24: 2.06, 25: 2.06, 26: 2.06, 27: 2.05, 28: 2.05, 29: 2.05,
}
NORMAL_QUANTILE_95 = 1.96


def nll_per_step(forecast: GmmForecast, truth: torch.Tensor) -> np.ndarray:
    """(N, t_f) NLL in nats; NaN everywhere if the forecast has no covariance."""
    if not forecast.has_covariance:
        return np.full((forecast.num_agents, forecast.horizon), np.nan)
    with torch.no_grad():
        return step_nll(forecast, truth).double().cpu().numpy()


def anll(forecast: GmmForecast, truth: torch.Tensor) -> np.ndarray:
    """(N,) NLL averaged over the horizon."""
    return nll_per_step(forecast, truth).mean(axis=-1)


def fnll(forecast: GmmForecast, truth: torch.Tensor) -> np.ndarray:
    """(N,) NLL at the final step."""
    return nll_per_step(forecast, truth)[:, -1]


def t_quantile(degrees_of_freedom: int) -> float:
    if degrees_of_freedom < 1:
        raise ValueError(f"Degrees of freedom must be at least 1, got {degrees_of_freedom}")
    return T_QUANTILES_95.get(degrees_of_freedom, NORMAL_QUANTILE_95)


def mean_ci(values: Sequence[float]) -> Tuple[float, float]:
    """
    Mean and 95% confidence half-width t * S / sqrt(n).

    Raises:
        ValueError: If fewer than two values are given
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    n = values.size
    if n < 2:
        raise ValueError(f"A confidence interval needs at least 2 values, got {n}")
    std = float(values.std(ddof=1))
    return float(values.mean()), t_quantile(n - 1) * std / math.sqrt(n)
