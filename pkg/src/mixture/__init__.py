"""Mixture forecasts, NLL and winner-takes-all losses, and the loss schedule."""
from .gmm import (
    LOG_2PI,
    GmmForecast,
    component_errors,
    component_log_density,
    ewta_loss,
    gmm_nll,
    most_likely_component,
    select_winners,
    step_nll,
)
from .schedule import LossPhase, LossRecipe, ScheduleState, schedule_step, scheduled_loss

__all__ = [
    'LOG_2PI',
    'GmmForecast',
    'component_errors',
    'component_log_density',
    'ewta_loss',
    'gmm_nll',
    'most_likely_component',
    'select_winners',
    'step_nll',
    'LossPhase',
    'LossRecipe',
    'ScheduleState',
    'schedule_step',
    'scheduled_loss',
]
