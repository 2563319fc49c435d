"""
Open-loop constant-velocity and constant-acceleration predictors.
"""
import torch


def _steps(sample_time: float, horizon: int, like: torch.Tensor) -> torch.Tensor:
    if sample_time <= 0:
        raise ValueError(f"Sample time must be positive, got {sample_time}")
    if horizon < 1:
        raise ValueError(f"Horizon must be at least 1, got {horizon}")
    return torch.arange(1, horizon + 1, dtype=like.dtype) * sample_time


def cv_predict(pos, vel, sample_time: float, horizon: int) -> torch.Tensor:
    """
    Positions pos + k*T_s*vel for k = 1..horizon.

    Args:
        pos, vel: (..., 2) arrays or tensors

    Returns:
        (..., horizon, 2) tensor
    """
    pos = torch.as_tensor(pos, dtype=torch.float64) if not torch.is_tensor(pos) else pos
    vel = torch.as_tensor(vel, dtype=pos.dtype)
    t = _steps(sample_time, horizon, pos)[:, None]
    return pos[..., None, :] + t * vel[..., None, :]


def ca_predict(pos, vel, acc, sample_time: float, horizon: int) -> torch.Tensor:
    """Positions pos + t*vel + t^2/2*acc with t = k*T_s."""
    pos = torch.as_tensor(pos, dtype=torch.float64) if not torch.is_tensor(pos) else pos
    vel = torch.as_tensor(vel, dtype=pos.dtype)
    acc = torch.as_tensor(acc, dtype=pos.dtype)
    t = _steps(sample_time, horizon, pos)[:, None]
    return pos[..., None, :] + t * vel[..., None, :] + 0.5 * t ** 2 * acc[..., None, :]
