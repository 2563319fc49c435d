"""
Mini-batch training under the scheduled objective.
"""
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import torch
from tqdm import tqdm

from ..core.errors import NumericalError, TrainingDiverged
from ..mixture import LossPhase, ScheduleState, gmm_nll, scheduled_loss
from ..recurrent import DecodeMode
from ..scenes import SceneBatch, SceneSequence, collate
from .checkpoint import Checkpoint
from .config import TrainConfig
from .model import Forecaster

logger = logging.getLogger(__name__)


@dataclass
class EpochRecord:
    """One line of the training log."""
    epoch: int
    phase: str
    winners: int
    beta: float
    train_loss: float
    val_nll: Optional[float]
    seconds: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainingResult:
    checkpoint: Checkpoint
    history: List[dict] = field(default_factory=list)

    @property
    def losses(self) -> List[float]:
        return [record['train_loss'] for record in self.history]

    def build(self) -> Forecaster:
        return self.checkpoint.build()


def chunk_scenes(scenes: Sequence[SceneSequence], batch_size: int,
                 generator: Optional[torch.Generator] = None) -> List[List[SceneSequence]]:
    """Split scenes into batches, shuffled when a generator is given."""
    if generator is None:
        order = list(range(len(scenes)))
    else:
        order = torch.randperm(len(scenes), generator=generator).tolist()
    return [[scenes[i] for i in order[start:start + batch_size]] for start in range(0, len(order), batch_size)]


def validation_nll(model: Forecaster, batches: Sequence[SceneBatch]) -> Optional[float]:
    """Rollout NLL averaged over agents with a full future; None without validation data."""
    total, count = 0.0, 0
    model.eval()
    with torch.no_grad():
        for batch in batches:
            valid = int(batch.future_valid.sum())
            if valid == 0:
                continue
            forecast = model(batch, DecodeMode.ROLLOUT, with_covariance=True, clamp=True)
            total += float(gmm_nll(forecast, batch.future, batch.future_valid)) * valid
            count += valid
    return total / count if count else None


def train(
    config: TrainConfig,
    train_scenes: Sequence[SceneSequence],
    val_scenes: Sequence[SceneSequence] = (),
    log_path: Optional[Union[str, Path]] = None,
) -> TrainingResult:
    """
    Train a forecaster with Adam under the winner-takes-all to NLL schedule.

    Decoding uses teacher forcing; agents without a full future are left
    out of the loss. The covariance is only computed once the objective
    needs it.

    Args:
        config: Model and optimiser settings
        train_scenes: Nonempty training scenes
        val_scenes: Scenes for the per-epoch validation NLL
        log_path: Optional line-delimited JSON training log

    Returns:
        TrainingResult with the final checkpoint and the per-epoch history

    Raises:
        ValueError: If there are no training scenes
        TrainingDiverged: If the loss becomes non-finite; carries the last
            good checkpoint
    """
    if not train_scenes:
        raise ValueError("Training needs at least one scene")
    torch.manual_seed(config.seed)
    model = Forecaster(config)
    model.fit_standardization(train_scenes)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate, betas=config.betas, eps=config.eps)
    schedule = ScheduleState(config.epochs, config.components)
    generator = torch.Generator().manual_seed(config.seed)
    val_batches = [collate(chunk, config.dtype) for chunk in chunk_scenes(val_scenes, config.batch_size)]
    logger.info("training %s on %d scene(s), validating on %d", config.get_summary(),
                len(train_scenes), len(val_scenes))

    history: List[dict] = []
    last_good = Checkpoint.capture(model, 0, history)
    log_handle = open(log_path, 'w') if log_path else None
    try:
        for epoch in range(config.epochs):
            started = time.perf_counter()
            recipe = schedule.advance()
            model.train()
            total, agents = 0.0, 0
            chunks = chunk_scenes(train_scenes, config.batch_size, generator)
            bar = tqdm(chunks, desc=f"epoch {epoch + 1}/{config.epochs}", disable=not config.progress, leave=False)
            for chunk in bar:
                batch = collate(chunk, config.dtype)
                try:
                    forecast = model(batch, DecodeMode.TEACHER_FORCING,
                                     with_covariance=recipe.phase != LossPhase.EWTA)
                    loss = scheduled_loss(recipe, forecast, batch.future, batch.future_valid, config.huber_delta)
                except NumericalError as exc:
                    logger.error("epoch %d: %s", epoch + 1, exc)
                    raise TrainingDiverged(epoch + 1, last_good) from exc
                if not torch.isfinite(loss):
                    raise TrainingDiverged(epoch + 1, last_good)
                optimizer.zero_grad()
                loss.backward()
                torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
                optimizer.step()
                valid = int(batch.future_valid.sum())
                total += float(loss.detach()) * valid
                agents += valid
                bar.set_postfix(loss=f"{float(loss.detach()):.4f}")

            try:
                val = validation_nll(model, val_batches)
            except NumericalError as exc:
                raise TrainingDiverged(epoch + 1, last_good) from exc
            record = EpochRecord(
                epoch=epoch + 1,
                phase=str(recipe.phase),
                winners=recipe.winners,
                beta=recipe.beta,
                train_loss=total / agents if agents else math.nan,
                val_nll=val,
                seconds=time.perf_counter() - started,
            )
            history.append(record.as_dict())
            if log_handle:
                log_handle.write(json.dumps(record.as_dict()) + "\n")
                log_handle.flush()
            val_text = "n/a" if val is None else f"{val:.4f}"
            logger.info("epoch %d/%d %s: train %.4f, val NLL %s", epoch + 1, config.epochs,
                        recipe.describe(), record.train_loss, val_text)
            last_good = Checkpoint.capture(model, epoch + 1, history)
    finally:
        if log_handle:
            log_handle.close()
    return TrainingResult(last_good, history)
