"""
Gaussian-mixture forecasts and their losses.
"""
import math
from dataclasses import dataclass
from typing import Optional

import torch

from ..core.activations import DEFAULT_HUBER_DELTA, huber
from ..core.errors import NumericalError

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class GmmForecast:
    """
    Per-agent mixture over the horizon.

    Weights are constant over the horizon. ``covariances`` holds the position
    block of each component covariance, floor included, or None for
    predictors without an uncertainty model.
    """
    weights: torch.Tensor  # (N, M)
    means: torch.Tensor  # (N, t_f, M, d_x)
    covariances: Optional[torch.Tensor] = None  # (N, t_f, M, 2, 2)

    def __post_init__(self):
        n, m = self.weights.shape
        if self.means.shape[0] != n or self.means.shape[2] != m:
            raise ValueError(
                f"Means of shape {tuple(self.means.shape)} do not match weights {tuple(self.weights.shape)}"
            )
        if self.covariances is not None and self.covariances.shape[:3] != self.means.shape[:3]:
            raise ValueError("Covariances must match the means in agents, steps and components")

    @property
    def num_agents(self) -> int:
        return self.weights.shape[0]

    @property
    def horizon(self) -> int:
        return self.means.shape[1]

    @property
    def components(self) -> int:
        return self.weights.shape[1]

    @property
    def positions(self) -> torch.Tensor:
        """(N, t_f, M, 2) component mean positions."""
        return self.means[..., :2]

    @property
    def has_covariance(self) -> bool:
        return self.covariances is not None

    def most_likely_positions(self) -> torch.Tensor:
        """(N, t_f, 2) mean positions of the highest-weight component."""
        best = most_likely_component(self)
        index = best[:, None, None, None].expand(-1, self.horizon, 1, 2)
        return self.positions.gather(2, index).squeeze(2)

    def detach(self) -> 'GmmForecast':
        cov = None if self.covariances is None else self.covariances.detach()
        return GmmForecast(self.weights.detach(), self.means.detach(), cov)


def most_likely_component(forecast: GmmForecast) -> torch.Tensor:
    """(N,) index of the largest weight; ties go to the lowest index."""
    return torch.argmax(forecast.weights, dim=-1)


def component_log_density(positions: torch.Tensor, covariances: torch.Tensor, truth: torch.Tensor) -> torch.Tensor:
    """
    log N(truth | position, covariance) for every component.

    Args:
        positions: (N, t_f, M, 2)
        covariances: (N, t_f, M, 2, 2)
        truth: (N, t_f, 2)

    Raises:
        NumericalError: If a covariance is not positive definite
    """
    L, info = torch.linalg.cholesky_ex(covariances)
    if bool((info != 0).any()):
        raise NumericalError("gmm_nll", "covariance is not positive definite")
    diff = (truth[:, :, None, :] - positions)[..., None]
    z = torch.linalg.solve_triangular(L, diff, upper=False).squeeze(-1)
    mahalanobis = (z ** 2).sum(-1)
    log_det = 2.0 * torch.log(torch.diagonal(L, dim1=-2, dim2=-1)).sum(-1)
    return -0.5 * (mahalanobis + log_det + 2.0 * LOG_2PI)


def step_nll(forecast: GmmForecast, truth: torch.Tensor) -> torch.Tensor:
    """(N, t_f) mixture NLL of the true positions at every horizon step."""
    if forecast.covariances is None:
        raise ValueError("The forecast carries no covariances; NLL is undefined")
    if truth.shape[1] != forecast.horizon:
        raise ValueError(f"Truth horizon {truth.shape[1]} does not match forecast horizon {forecast.horizon}")
    log_density = component_log_density(forecast.positions, forecast.covariances, truth[..., :2])
    log_weights = torch.log(forecast.weights)[:, None, :]
    nll = -torch.logsumexp(log_weights + log_density, dim=-1)
    if not bool(torch.isfinite(nll).all()):
        raise NumericalError("gmm_nll", "mixture likelihood")
    return nll


def _masked_mean(per_agent: torch.Tensor, valid: Optional[torch.Tensor]) -> torch.Tensor:
    if valid is None:
        return per_agent.mean()
    if not bool(valid.any()):
        return per_agent.sum() * 0.0
    return per_agent[valid].mean()


def gmm_nll(forecast: GmmForecast, truth: torch.Tensor, valid: Optional[torch.Tensor] = None) -> torch.Tensor:
    """
    Horizon-summed mixture NLL, averaged over the valid agents.

    Args:
        forecast: Mixture with covariances
        truth: (N, t_f, >=2) true states; only positions are used
        valid: Optional (N,) mask of agents with a full future
    """
    return _masked_mean(step_nll(forecast, truth).sum(dim=1), valid)


def component_errors(positions: torch.Tensor, truth: torch.Tensor, delta: float = DEFAULT_HUBER_DELTA) -> torch.Tensor:
    """(N, M) Huber error of every component summed over coordinates and horizon."""
    error = positions - truth[:, :, None, :2]
    return huber(error, delta).sum(dim=(1, 3))


def select_winners(totals: torch.Tensor, winners: int) -> torch.Tensor:
    """(N, K) indices of the K smallest totals; stable, so ties keep the lower index."""
    if not 1 <= winners <= totals.shape[-1]:
        raise ValueError(f"Winner count must be in [1, {totals.shape[-1]}], got {winners}")
    order = torch.sort(totals.detach(), dim=-1, stable=True).indices
    return order[..., :winners]


def ewta_loss(
    positions: torch.Tensor,
    truth: torch.Tensor,
    winners: int,
    valid: Optional[torch.Tensor] = None,
    delta: float = DEFAULT_HUBER_DELTA,
) -> torch.Tensor:
    """
    Evolving winner-takes-all loss: Huber error summed over the K
    best-fitting components, averaged over valid agents.

    Args:
        positions: (N, t_f, M, 2) component mean positions
        truth: (N, t_f, >=2) true states
        winners: K, 1 <= K <= M
    """
    totals = component_errors(positions, truth, delta)
    chosen = select_winners(totals, winners)
    return _masked_mean(totals.gather(-1, chosen).sum(-1), valid)
