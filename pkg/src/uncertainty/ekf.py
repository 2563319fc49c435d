"""
EKF time update along the mean trajectory of each mixture component.

Process noise is additive on the two highest-order states. The state
Jacobian is the exact derivative of the discrete RK4 transition, taken with
autograd so that covariances remain differentiable in every parameter.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import torch

from ..core.activations import softplus, softsign
from ..core.errors import NumericalError

logger = logging.getLogger(__name__)

StepFn = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]

PSD_TOLERANCE = 1e-10


@dataclass
class ProcessNoise:
    """Correlated 2x2 process noise from its raw head outputs."""
    rho: torch.Tensor
    sigma1: torch.Tensor
    sigma2: torch.Tensor

    @property
    def Q(self) -> torch.Tensor:
        """(..., 2, 2) covariance [[s1^2, rho s1 s2], [rho s1 s2, s2^2]]."""
        off = self.rho * self.sigma1 * self.sigma2
        row1 = torch.stack([self.sigma1 ** 2, off], dim=-1)
        row2 = torch.stack([off, self.sigma2 ** 2], dim=-1)
        return torch.stack([row1, row2], dim=-2)

    @property
    def determinant(self) -> torch.Tensor:
        return self.sigma1 ** 2 * self.sigma2 ** 2 * (1.0 - self.rho ** 2)


@dataclass
class EkfBelief:
    """State estimate with its covariance."""
    mean: torch.Tensor  # (..., d_x)
    covariance: torch.Tensor  # (..., d_x, d_x)

    @classmethod
    def certain(cls, mean: torch.Tensor) -> 'EkfBelief':
        """A belief with zero covariance."""
        d = mean.shape[-1]
        return cls(mean, mean.new_zeros(mean.shape + (d,)))

    @property
    def state_width(self) -> int:
        return self.mean.shape[-1]

    def position_covariance(self) -> torch.Tensor:
        return self.covariance[..., :2, :2]

    def min_eigenvalue(self) -> torch.Tensor:
        return torch.linalg.eigvalsh(self.covariance.detach()).min()


def build_Q(rho_raw: torch.Tensor, s1_raw: torch.Tensor, s2_raw: torch.Tensor) -> ProcessNoise:
    """rho = softsign(rho_raw), sigma_i = softplus(s_i_raw)."""
    return ProcessNoise(softsign(rho_raw), softplus(s1_raw), softplus(s2_raw))


def build_G(state_width: int, sample_time: float, dtype: torch.dtype = torch.float64) -> torch.Tensor:
    """
    Noise input matrix: T_s times the selector of the two highest-order states.

    Raises:
        ValueError: If state_width is not 2 or 4
    """
    if state_width not in (2, 4):
        raise ValueError(f"Unsupported state width {state_width}; expected 2 or 4")
    G = torch.zeros(state_width, 2, dtype=dtype)
    G[-2:, :] = sample_time * torch.eye(2, dtype=dtype)
    return G


def state_jacobian(transition: StepFn, mean: torch.Tensor, u: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Next state and the Jacobian of the transition in the state.

    Rows of the transition only depend on their own batch entry, so each
    Jacobian row comes from one backward pass over the batch sum. With grad
    mode on, the Jacobian stays in the graph.

    Returns:
        (f(mean, u) of shape (..., d_x), F of shape (..., d_x, d_x))
    """
    create_graph = torch.is_grad_enabled()
    with torch.enable_grad():
        x = mean if (create_graph and mean.requires_grad) else mean.detach().requires_grad_(True)
        following = transition(x, u)
        rows = []
        for i in range(following.shape[-1]):
            (row,) = torch.autograd.grad(
                following[..., i].sum(), x, create_graph=create_graph, retain_graph=True
            )
            rows.append(row)
        F = torch.stack(rows, dim=-2)
    if not create_graph:
        following, F = following.detach(), F.detach()
    return following, F


def symmetrize(P: torch.Tensor) -> torch.Tensor:
    return 0.5 * (P + P.transpose(-1, -2))


def clamp_psd(P: torch.Tensor) -> torch.Tensor:
    """Project onto the PSD cone by clipping negative eigenvalues."""
    values, vectors = torch.linalg.eigh(P)
    return vectors @ torch.diag_embed(values.clamp_min(0.0)) @ vectors.transpose(-1, -2)


def ekf_time_update(
    belief: EkfBelief,
    u: torch.Tensor,
    noise: ProcessNoise,
    transition: StepFn,
    sample_time: float,
    clamp: bool = False,
) -> EkfBelief:
    """
    x+ = f(x, u); P+ = F P F^T + G Q G^T, symmetrised.

    Args:
        clamp: Clip negative eigenvalues afterwards (only outside the gradient path)

    Raises:
        NumericalError: If the new covariance is not finite
    """
    mean, F = state_jacobian(transition, belief.mean, u)
    G = build_G(belief.state_width, sample_time, belief.mean.dtype)
    P = F @ belief.covariance @ F.transpose(-1, -2) + G @ noise.Q @ G.T
    P = symmetrize(P)
    if not bool(torch.isfinite(P).all()):
        raise NumericalError("ekf time update", "covariance")
    if clamp and not torch.is_grad_enabled():
        P = clamp_psd(P)
    return EkfBelief(mean, P)


def propagate_component(
    initial: torch.Tensor,
    inputs: torch.Tensor,
    noise_raw: torch.Tensor,
    transition: StepFn,
    sample_time: float,
    clamp: bool = False,
) -> List[EkfBelief]:
    """
    Run the time update over the horizon from a certain initial state.

    Args:
        initial: (..., d_x) state at the prediction instant (P0 = 0)
        inputs: (..., t_f, 2) motion inputs
        noise_raw: (..., t_f, 3) raw (rho, s1, s2) per step
        transition: One motion step f(x, u)
        sample_time: T_s

    Returns:
        One belief per horizon step
    """
    horizon = inputs.shape[-2]
    if horizon < 1:
        raise ValueError(f"Horizon must be at least 1, got {horizon}")
    belief = EkfBelief.certain(initial)
    beliefs = []
    for k in range(horizon):
        raw = noise_raw[..., k, :]
        noise = build_Q(raw[..., 0], raw[..., 1], raw[..., 2])
        belief = ekf_time_update(belief, inputs[..., k, :], noise, transition, sample_time, clamp)
        beliefs.append(belief)
    logger.debug("propagated %d EKF steps for batch shape %s", horizon, tuple(initial.shape[:-1]))
    return beliefs


def stack_beliefs(beliefs: List[EkfBelief]) -> Tuple[torch.Tensor, torch.Tensor]:
    """(means (..., t_f, d_x), covariances (..., t_f, d_x, d_x))."""
    means = torch.stack([b.mean for b in beliefs], dim=-2)
    covariances = torch.stack([b.covariance for b in beliefs], dim=-3)
    return means, covariances
