"""
End-to-end gradient check of the scheduled loss on a tiny scene.
"""
import logging
from dataclasses import replace
from typing import List, Optional

import torch

from ..core.errors import ConfigurationError
from ..core.gradients import DEFAULT_STEP, DEFAULT_TOLERANCE, GradientCheckReport, check_gradients
from ..data import SCENARIO_CONFIGS, downsample, generate_synthetic, window_lengths, window_scenes
from ..mixture import LossPhase, LossRecipe, ScheduleState, schedule_step, scheduled_loss
from ..recurrent import DecodeMode
from ..scenes import SceneSequence, collate
from .config import TrainConfig
from .model import Forecaster

logger = logging.getLogger(__name__)

TINY_CONFIG = TrainConfig(
    epochs=16,
    batch_size=1,
    hidden=8,
    components=2,
    history=0.8,
    horizon=0.8,
    precision="float64",
    progress=False,
)
# scale of the seeded offset given to parameters initialised at exactly zero
OFFSET_SCALE = 0.1


def tiny_scene(config: Optional[TrainConfig] = None, seed: int = 0, agents: int = 3) -> SceneSequence:
    """A fork scene with ``agents`` agents on the sample grid and window of ``config``."""
    config = config or TINY_CONFIG
    preset = SCENARIO_CONFIGS['fork']
    factor = max(1, int(round(config.sample_time * preset.rate_hz)))
    if abs(factor / preset.rate_hz - config.sample_time) > 1e-9:
        raise ConfigurationError(
            f"sample_time {config.sample_time:g}s is not a multiple of the {preset.rate_hz:g} Hz scene rate"
        )
    slots, steps = window_lengths(config.sample_time, config.history, config.horizon)
    frames = max(preset.frames, (slots + steps - 1) * factor + 1)
    table = generate_synthetic('fork', 1, seed, min_agents=agents, max_agents=agents, frames=frames)
    scenes = window_scenes(downsample(table, factor), config.history, config.horizon, stride=10)
    if not scenes:
        raise ConfigurationError(
            f"A {config.history:g}s + {config.horizon:g}s window does not fit the tiny fork scene"
        )
    return scenes[0]


def phase_recipe(schedule: ScheduleState, phase: LossPhase) -> LossRecipe:
    """The recipe of the middle epoch of ``phase``."""
    epochs = [n for n in range(schedule.total_epochs) if schedule_step(schedule, n).phase == phase]
    if not epochs:
        raise ConfigurationError(f"A {schedule.total_epochs}-epoch schedule has no {phase} phase")
    return schedule_step(schedule, epochs[len(epochs) // 2])


def offset_zero_parameters(model: torch.nn.Module, seed: int, scale: float = OFFSET_SCALE) -> List[str]:
    """
    Give every parameter that is exactly zero a small seeded random value.

    Zero initial states and biases put the first GNN layer's leaky ReLU at
    its kink, where central differences and autograd disagree.
    """
    generator = torch.Generator().manual_seed(seed)
    moved = []
    with torch.no_grad():
        for name, parameter in model.named_parameters():
            if parameter.numel() and not parameter.any():
                noise = torch.randn(parameter.shape, generator=generator, dtype=torch.float64)
                parameter.copy_(scale * noise)
                moved.append(name)
    return moved


def run_gradcheck(
    config: Optional[TrainConfig] = None,
    per_parameter: Optional[int] = 8,
    seed: int = 0,
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    corrupt: bool = False,
    phase: LossPhase = LossPhase.BLEND,
) -> GradientCheckReport:
    """
    Compare autograd gradients of one scheduled loss with central differences.

    Args:
        config: Model, window and schedule settings (default TINY_CONFIG); always run in float64
        per_parameter: Coordinates checked per tensor (None = all)
        seed: Seed of the parameters, the scene and the coordinate sample
        corrupt: Perturb the analytic gradient (negative control)
        phase: Which part of the loss schedule to differentiate
    """
    config = replace(config or TINY_CONFIG, precision="float64", seed=seed)
    torch.manual_seed(seed)
    scene = tiny_scene(config, seed)
    model = Forecaster(config)
    moved = offset_zero_parameters(model, seed)
    logger.debug("offset %d zero-initialised tensor(s)", len(moved))
    model.fit_standardization([scene])
    batch = collate([scene], torch.float64)
    recipe = phase_recipe(ScheduleState(config.epochs, config.components), phase)
    with_covariance = recipe.phase != LossPhase.EWTA

    def loss_fn(params):
        forecast = model.functional(params, batch, mode=DecodeMode.TEACHER_FORCING, with_covariance=with_covariance)
        return scheduled_loss(recipe, forecast, batch.future, batch.future_valid, config.huber_delta)

    logger.info("gradient check: %s, %s", recipe.describe(), scene.summary())
    return check_gradients(loss_fn, model.parameter_set(), step, tolerance, per_parameter, seed, corrupt)
