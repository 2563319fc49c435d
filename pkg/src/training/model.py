"""
The forecaster: graph-GRU encoder, attentive graph-GRU decoder, learned
motion model, EKF covariance propagation and the Gaussian-mixture output.
"""
import logging
from typing import Optional, Sequence

import torch
from torch import nn
from torch.func import functional_call

from ..core.activations import softmax
from ..core.params import ParameterSet
from ..mixture import GmmForecast
from ..motion import MotionModel
from ..recurrent import DecodeMode, GraphDecoder, GraphEncoder
from ..scenes import FEATURE_DIM, NUM_CATEGORIES, SceneBatch, SceneSequence, kernel_weight
from ..uncertainty import build_Q, propagate_component, stack_beliefs
from .config import TrainConfig

logger = logging.getLogger(__name__)

MIN_STD = 1e-6


class Forecaster(nn.Module):
    """
    Maps a scene batch to a per-agent Gaussian mixture over the horizon.

    With ``use_ode`` the decoder heads are motion inputs integrated by the
    learned ODE; without it they are position offsets from the last observed
    position (a plain mixture density network).

    The mixture-density variant never regresses absolute positions: step k's
    mean is the agent's last observed position plus the k-th offset head, so
    forecasts from both variants are in the same scene-frame coordinates.
    Its covariances come straight from the noise heads.
    """

    def __init__(self, config: TrainConfig):
        super().__init__()
        self.config = config
        self.use_ode = config.use_ode
        self.use_ekf = config.ekf_enabled
        self.use_static = config.use_static and config.use_ode
        self.state_width = config.order.state_width if config.use_ode else 2
        self.horizon = config.horizon_steps
        self.sample_time = config.sample_time

        stack_options = {
            'layers': config.gnn_layers,
            'hidden': config.gnn_hidden,
            'heads': config.gnn_heads,
            'leaky_slope': config.leaky_slope,
        }
        self.sigma_e = nn.Parameter(torch.tensor(float(config.sigma_e_init)))
        self.encoder = GraphEncoder(FEATURE_DIM, config.hidden, config.kind, config.use_encoder_gnn, **stack_options)
        self.decoder = GraphDecoder(
            config.hidden, self.state_width, config.components, config.history_slots,
            config.kind, config.use_decoder_gnn, **stack_options,
        )
        self.motion = None
        if config.use_ode:
            self.motion = MotionModel(
                config.order, config.sample_time,
                static_width=NUM_CATEGORIES if self.use_static else 0,
                hidden=config.ode_hidden, layers=config.ode_layers,
            )
        self.register_buffer('feature_mean', torch.zeros(FEATURE_DIM))
        self.register_buffer('feature_std', torch.ones(FEATURE_DIM))
        self.to(config.dtype)

    def fit_standardization(self, scenes: Sequence[SceneSequence]):
        """Set feature and decoder-state statistics from training scenes."""
        if not self.config.standardize or not scenes:
            return
        observed = torch.cat([
            torch.as_tensor(s.features[s.mask], dtype=self.feature_mean.dtype) for s in scenes
        ])
        futures = [s.future[s.future_valid][..., :self.state_width] for s in scenes]
        states = torch.cat([torch.as_tensor(f.reshape(-1, self.state_width), dtype=self.feature_mean.dtype)
                            for f in futures])
        with torch.no_grad():
            if len(observed):
                self.feature_mean.copy_(observed.mean(dim=0))
                self.feature_std.copy_(_safe_std(observed))
            if len(states):
                self.decoder.state_mean.copy_(states.mean(dim=0))
                self.decoder.state_std.copy_(_safe_std(states))
        logger.debug("standardisation fitted on %d observations", len(observed))

    def edge_weights(self, distances):
        return [kernel_weight(d, self.sigma_e) for d in distances]

    def initial_state(self, batch: SceneBatch) -> torch.Tensor:
        return batch.last_state[:, :self.state_width]

    def static(self, batch: SceneBatch) -> Optional[torch.Tensor]:
        return batch.static_features() if self.use_static else None

    def forward(
        self,
        batch: SceneBatch,
        mode: DecodeMode = DecodeMode.TEACHER_FORCING,
        with_covariance: bool = True,
        clamp: bool = False,
    ) -> GmmForecast:
        """
        Args:
            batch: Collated scenes
            mode: Decoder state feedback (ground truth or own rollout)
            with_covariance: Skip the covariance when only means are needed
            clamp: Project covariances onto the PSD cone (no-grad evaluation)
        """
        features = (batch.features - self.feature_mean) / self.feature_std
        features = torch.where(batch.mask[..., None], features, torch.zeros_like(features))
        memory, hidden = self.encoder(features, batch.mask, batch.edges, self.edge_weights(batch.distances))

        edges, distances = batch.decoder_edges()
        initial = self.initial_state(batch)
        static = self.static(batch)
        transition = self.motion.transition(static) if self.use_ode else self._offset_transition(initial)
        truth = batch.future[..., :self.state_width]
        out = self.decoder(
            memory, hidden, edges, kernel_weight(distances, self.sigma_e), initial,
            batch.horizon, mode, truth, transition,
        )
        weights = softmax(out.logits, dim=-1)
        u = out.u.transpose(1, 2)  # (N, M, t_f, 2)
        noise = out.noise.transpose(1, 2)
        n, m = weights.shape
        start = initial[:, None, :].expand(n, m, self.state_width)

        if not self.use_ode:
            means = initial[:, None, None, :2] + out.u
            covariances = self._head_covariance(out.noise) if with_covariance else None
            return GmmForecast(weights, means, covariances)

        step = lambda x, inputs: self.motion(x, inputs, static)
        if self.use_ekf and with_covariance:
            beliefs = propagate_component(start, u, noise, step, self.sample_time, clamp)
            means, covariances = stack_beliefs(beliefs)
            covariances = covariances[..., :2, :2].transpose(1, 2)
            covariances = covariances + self._floor(covariances)
            return GmmForecast(weights, means.transpose(1, 2), covariances)

        states, rolled = start, []
        for k in range(batch.horizon):
            states = step(states, u[:, :, k])
            rolled.append(states)
        means = torch.stack(rolled, dim=1)
        covariances = self._head_covariance(out.noise) if with_covariance else None
        return GmmForecast(weights, means, covariances)

    def _offset_transition(self, initial: torch.Tensor):
        """Rollout feedback of the mixture-density variant: last position plus offset."""
        def advance(_step: int, _states: torch.Tensor, u: torch.Tensor) -> torch.Tensor:
            return initial[:, None, :2] + u
        return advance

    def _head_covariance(self, noise: torch.Tensor) -> torch.Tensor:
        """(N, t_f, M, 2, 2) position covariance straight from the noise heads."""
        Q = build_Q(noise[..., 0], noise[..., 1], noise[..., 2]).Q
        return Q + self._floor(Q)

    def _floor(self, covariances: torch.Tensor) -> torch.Tensor:
        eye = torch.eye(2, dtype=covariances.dtype, device=covariances.device)
        return self.config.covariance_floor * eye

    def parameter_set(self) -> ParameterSet:
        return ParameterSet.from_module(self)

    def functional(self, params: ParameterSet, batch: SceneBatch, **kwargs) -> GmmForecast:
        """Forward pass with parameters substituted from ``params``."""
        return functional_call(self, params.as_dict(), (batch,), kwargs)


def _safe_std(values: torch.Tensor) -> torch.Tensor:
    if len(values) < 2:
        return torch.ones(values.shape[-1], dtype=values.dtype)
    std = values.std(dim=0)
    return torch.where(std < MIN_STD, torch.ones_like(std), std)
