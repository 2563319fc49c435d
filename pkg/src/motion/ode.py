"""
Learned-ODE motion models and the explicit RK4 integrator.

First order: the state is (x, y) and two networks give the velocities.
Second order: the state is (x, y, vx, vy); positions follow the velocities
and two networks give the accelerations. Network inputs are two state
components and one motion-input component, optionally followed by the
agent's one-hot category.
"""
from enum import Enum
from typing import Callable, Optional

import torch
from torch import nn

from ..core.errors import NumericalError

DEFAULT_HIDDEN = 16
DEFAULT_LAYERS = 2


class MotionOrder(Enum):
    """Order of the learned dynamics with its state width."""
    FIRST = (1, 2)
    SECOND = (2, 4)

    def __init__(self, order: int, state_width: int):
        self.order = order
        self.state_width = state_width

    @classmethod
    def from_int(cls, order: int) -> 'MotionOrder':
        for member in cls:
            if member.order == order:
                return member
        raise ValueError(f"Motion order must be 1 or 2, got {order}")


def ode_network(in_width: int, hidden: int = DEFAULT_HIDDEN, layers: int = DEFAULT_LAYERS) -> nn.Sequential:
    """Fully connected ELU network with a scalar output."""
    modules = []
    width = in_width
    for _ in range(layers):
        modules += [nn.Linear(width, hidden), nn.ELU()]
        width = hidden
    modules.append(nn.Linear(width, 1))
    return nn.Sequential(*modules)


class OdeNetworks(nn.Module):
    """The pair (f1, f2) of scalar derivative networks."""

    def __init__(
        self,
        static_width: int = 0,
        hidden: int = DEFAULT_HIDDEN,
        layers: int = DEFAULT_LAYERS,
        zero_output: bool = False,
        f1: Optional[nn.Module] = None,
        f2: Optional[nn.Module] = None,
    ):
        super().__init__()
        self.static_width = static_width
        self.f1 = f1 if f1 is not None else ode_network(3 + static_width, hidden, layers)
        self.f2 = f2 if f2 is not None else ode_network(3 + static_width, hidden, layers)
        if zero_output:
            for net in (self.f1, self.f2):
                last = net[-1]
                nn.init.zeros_(last.weight)
                nn.init.zeros_(last.bias)

    def evaluate(
        self,
        first: torch.Tensor,
        second: torch.Tensor,
        u: torch.Tensor,
        static: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        """(f1(first, second, u1), f2(first, second, u2)) stacked on the last axis."""
        columns = [first[..., None], second[..., None]]
        extra = [] if static is None else [static]
        in1 = torch.cat(columns + [u[..., 0:1]] + extra, dim=-1)
        in2 = torch.cat(columns + [u[..., 1:2]] + extra, dim=-1)
        return torch.cat([self.f1(in1), self.f2(in2)], dim=-1)


def broadcast_static(static: Optional[torch.Tensor], state: torch.Tensor) -> Optional[torch.Tensor]:
    """Expand (N, C) one-hots to the leading shape of ``state``."""
    if static is None:
        return None
    leading = state.shape[:-1]
    while static.dim() < len(leading) + 1:
        static = static.unsqueeze(-2)
    return static.expand(*leading, static.shape[-1])


def derivative_first_order(
    state: torch.Tensor,
    u: torch.Tensor,
    nets: OdeNetworks,
    static: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """(dx, dy) = (f1(x, y, u1), f2(x, y, u2))."""
    return nets.evaluate(state[..., 0], state[..., 1], u, broadcast_static(static, state))


def derivative_second_order(
    state: torch.Tensor,
    u: torch.Tensor,
    nets: OdeNetworks,
    static: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """(dx, dy, dvx, dvy) = (vx, vy, f1(vx, vy, u1), f2(vx, vy, u2))."""
    velocity = state[..., 2:4]
    acceleration = nets.evaluate(state[..., 2], state[..., 3], u, broadcast_static(static, state))
    return torch.cat([velocity, acceleration], dim=-1)


DERIVATIVES = {
    MotionOrder.FIRST: derivative_first_order,
    MotionOrder.SECOND: derivative_second_order,
}


def rk4_step(field: Callable[[torch.Tensor], torch.Tensor], state: torch.Tensor, sample_time: float) -> torch.Tensor:
    """One classical Runge-Kutta step of length ``sample_time``."""
    half = 0.5 * sample_time
    k1 = field(state)
    k2 = field(state + half * k1)
    k3 = field(state + half * k2)
    k4 = field(state + sample_time * k3)
    return state + (sample_time / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(
    state: torch.Tensor,
    u: torch.Tensor,
    nets: OdeNetworks,
    sample_time: float,
    order: MotionOrder = MotionOrder.SECOND,
    static: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """
    Advance the state by one sample interval with u held constant.

    Raises:
        ValueError: If sample_time is not positive
        NumericalError: If the integrated state is not finite
    """
    if sample_time <= 0:
        raise ValueError(f"Sample time must be positive, got {sample_time}")
    if state.shape[-1] != order.state_width:
        raise ValueError(f"{order.name.lower()}-order state must have width {order.state_width}, got {state.shape[-1]}")
    derivative = DERIVATIVES[order]
    following = rk4_step(lambda x: derivative(x, u, nets, static), state, sample_time)
    if not bool(torch.isfinite(following).all()):
        raise NumericalError("motion step", f"order {order.order}, T_s={sample_time}")
    return following


class MotionModel(nn.Module):
    """Learned dynamics of a fixed order and sample time."""

    def __init__(
        self,
        order: MotionOrder,
        sample_time: float,
        static_width: int = 0,
        hidden: int = DEFAULT_HIDDEN,
        layers: int = DEFAULT_LAYERS,
        zero_output: bool = False,
    ):
        super().__init__()
        if sample_time <= 0:
            raise ValueError(f"Sample time must be positive, got {sample_time}")
        self.order = order
        self.sample_time = sample_time
        self.nets = OdeNetworks(static_width, hidden, layers, zero_output)

    @property
    def state_width(self) -> int:
        return self.order.state_width

    def forward(self, state: torch.Tensor, u: torch.Tensor, static: Optional[torch.Tensor] = None) -> torch.Tensor:
        return step(state, u, self.nets, self.sample_time, self.order, static)

    def transition(self, static: Optional[torch.Tensor] = None):
        """Decoder callback advancing (N, M, d_s) component states."""
        def advance(_step: int, states: torch.Tensor, u: torch.Tensor) -> torch.Tensor:
            return self(states, u, static)
        return advance
