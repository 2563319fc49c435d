"""
Training-objective schedule: shrinking winner-takes-all, a blend, then NLL.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import torch

from ..core.activations import DEFAULT_HUBER_DELTA
from .gmm import GmmForecast, ewta_loss, gmm_nll


class LossPhase(Enum):
    EWTA = "ewta"
    BLEND = "blend"
    NLL = "nll"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class LossRecipe:
    """The objective of one epoch."""
    phase: LossPhase
    winners: int
    beta: float

    def describe(self) -> str:
        if self.phase == LossPhase.EWTA:
            return f"EWTA with {self.winners} winner(s)"
        if self.phase == LossPhase.BLEND:
            return f"{self.beta:.3f} EWTA(1) + {1.0 - self.beta:.3f} NLL"
        return "NLL"


@dataclass
class ScheduleState:
    """Schedule over ``total_epochs`` for a mixture of ``components``."""
    total_epochs: int
    components: int
    epoch: int = 0

    def __post_init__(self):
        if self.total_epochs < 8:
            raise ValueError(f"The schedule needs at least 8 epochs, got {self.total_epochs}")
        if self.components < 1:
            raise ValueError(f"Component count must be at least 1, got {self.components}")

    @property
    def ewta_epochs(self) -> float:
        return self.total_epochs / 8

    @property
    def warm_epochs(self) -> float:
        return self.total_epochs / 4

    def recipe(self) -> LossRecipe:
        return schedule_step(self, self.epoch)

    def advance(self) -> LossRecipe:
        recipe = self.recipe()
        self.epoch += 1
        return recipe


def schedule_step(state: ScheduleState, epoch: int) -> LossRecipe:
    """
    Loss recipe for epoch n.

    n < T/8: EWTA with K = ceil(M (T/8 - n) / (T/8));
    T/8 <= n < T/4: beta EWTA(K=1) + (1 - beta) NLL with beta = (T/4 - n) / (T/4 - T/8);
    otherwise NLL.
    """
    T, M = state.total_epochs, state.components
    if not 0 <= epoch < T:
        raise ValueError(f"Epoch {epoch} outside [0, {T})")
    # integer forms of n < T/8 and n < T/4
    if 8 * epoch < T:
        winners = -(-M * (T - 8 * epoch) // T)
        return LossRecipe(LossPhase.EWTA, max(1, min(M, winners)), 1.0)
    if 4 * epoch < T:
        beta = (2 * T - 8 * epoch) / T
        return LossRecipe(LossPhase.BLEND, 1, beta)
    return LossRecipe(LossPhase.NLL, 1, 0.0)


def scheduled_loss(
    recipe: LossRecipe,
    forecast: GmmForecast,
    truth: torch.Tensor,
    valid: Optional[torch.Tensor] = None,
    delta: float = DEFAULT_HUBER_DELTA,
) -> torch.Tensor:
    """Evaluate the recipe's objective on one batch."""
    if recipe.phase == LossPhase.EWTA:
        return ewta_loss(forecast.positions, truth, recipe.winners, valid, delta)
    nll = gmm_nll(forecast, truth, valid)
    if recipe.phase == LossPhase.BLEND:
        wta = ewta_loss(forecast.positions, truth, 1, valid, delta)
        return recipe.beta * wta + (1.0 - recipe.beta) * nll
    return nll
