"""
A common prediction interface for the learned model and the kinematic baselines.
"""
from typing import Dict, Type

import torch

from ..mixture import GmmForecast
from ..motion import ca_predict, cv_predict
from ..recurrent import DecodeMode
from ..scenes import SceneBatch
from .model import Forecaster


class Predictor:
    """Produces a GmmForecast for every agent of a batch."""
    name = "predictor"

    def predict(self, batch: SceneBatch) -> GmmForecast:
        raise NotImplementedError


class ModelPredictor(Predictor):
    """Rollout decoding of a trained forecaster, without gradients."""
    name = "model"

    def __init__(self, model: Forecaster):
        self.model = model

    def predict(self, batch: SceneBatch) -> GmmForecast:
        self.model.eval()
        with torch.no_grad():
            return self.model(batch, DecodeMode.ROLLOUT, with_covariance=True, clamp=True).detach()


class ConstantVelocityPredictor(Predictor):
    """One-component forecast along the last observed velocity; no covariance."""
    name = "cv"

    def predict(self, batch: SceneBatch) -> GmmForecast:
        last = batch.last_state
        positions = cv_predict(last[:, :2], last[:, 2:4], batch.sample_time, batch.horizon)
        return _single_component(positions.to(last.dtype))


class ConstantAccelerationPredictor(Predictor):
    """One-component forecast with the last observed acceleration held; no covariance."""
    name = "ca"

    def predict(self, batch: SceneBatch) -> GmmForecast:
        last = batch.features[:, -1]
        positions = ca_predict(last[:, 0:2], last[:, 2:4], last[:, 4:6], batch.sample_time, batch.horizon)
        return _single_component(positions.to(last.dtype))


def _single_component(positions: torch.Tensor) -> GmmForecast:
    n = positions.shape[0]
    weights = torch.ones(n, 1, dtype=positions.dtype)
    return GmmForecast(weights, positions[:, :, None, :])


BASELINES: Dict[str, Type[Predictor]] = {
    'cv': ConstantVelocityPredictor,
    'ca': ConstantAccelerationPredictor,
}


def baseline(name: str) -> Predictor:
    try:
        return BASELINES[name]()
    except KeyError:
        raise ValueError(f"Unknown baseline {name!r}; expected one of {sorted(BASELINES)}") from None
