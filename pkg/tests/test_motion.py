"""
Tests for the learned-ODE motion models and the analytic baselines.
"""
import os
import sys

import pytest
import torch
from torch import nn
from torch.autograd.functional import jacobian

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.core import NumericalError  # noqa: E402
from src.motion import (  # noqa: E402
    MotionModel,
    MotionOrder,
    OdeNetworks,
    ca_predict,
    cv_predict,
    derivative_first_order,
    derivative_second_order,
    step,
)

DT = torch.float64


class InputPassThrough(nn.Module):
    """Returns the motion-input column of a network input."""

    def forward(self, x):
        return x[..., 2:3]


def pass_through_nets():
    return OdeNetworks(f1=InputPassThrough(), f2=InputPassThrough())


def zero_nets():
    return OdeNetworks(zero_output=True).double()


def test_zero_networks_are_stationary():
    """Test that zero networks give no first-order motion and pure CV flow at second order."""
    nets = zero_nets()
    u = torch.tensor([0.7, -0.3], dtype=DT)
    first = derivative_first_order(torch.tensor([3.0, 4.0], dtype=DT), u, nets)
    assert torch.equal(first, torch.zeros(2, dtype=DT))
    second = derivative_second_order(torch.tensor([0.0, 0.0, 10.0, 0.0], dtype=DT), u, nets)
    assert torch.equal(second, torch.tensor([10.0, 0.0, 0.0, 0.0], dtype=DT))
    print("✓ Zero networks work")


def test_pass_through_networks():
    """Test that f = u gives the input as velocity or acceleration."""
    nets = pass_through_nets()
    u = torch.tensor([2.0, 0.0], dtype=DT)
    assert derivative_first_order(torch.zeros(2, dtype=DT), u, nets).tolist() == [2.0, 0.0]
    accel = derivative_second_order(torch.tensor([0.0, 0.0, 1.0, 1.0], dtype=DT), u, nets)
    assert accel.tolist() == [1.0, 1.0, 2.0, 0.0]


def test_rk4_step_exact_on_linear_flow():
    """Test one second-order step at 10 m/s and one first-order step at unit input."""
    state = torch.tensor([0.0, 0.0, 10.0, 0.0], dtype=DT)
    following = step(state, torch.zeros(2, dtype=DT), zero_nets(), 0.2)
    assert torch.allclose(following, torch.tensor([2.0, 0.0, 10.0, 0.0], dtype=DT), atol=1e-12)
    moved = step(torch.zeros(2, dtype=DT), torch.tensor([1.0, 0.0], dtype=DT), pass_through_nets(), 0.2,
                 MotionOrder.FIRST)
    assert moved[0].item() == pytest.approx(0.2)


def test_zero_networks_match_constant_velocity():
    """Test 25 second-order steps with zero networks against the CV baseline."""
    model = MotionModel(MotionOrder.SECOND, 0.2, zero_output=True).double()
    state = torch.tensor([[1.0, -2.0, 10.0, 1.5]], dtype=DT)
    u = torch.zeros(1, 2, dtype=DT)
    positions = []
    for _ in range(25):
        state = model(state, u)
        positions.append(state[:, :2])
    rolled = torch.stack(positions, dim=1)
    reference = cv_predict(torch.tensor([[1.0, -2.0]], dtype=DT), torch.tensor([[10.0, 1.5]], dtype=DT), 0.2, 25)
    assert (rolled - reference).abs().max().item() <= 1e-9
    assert rolled[0, -1, 0].item() == pytest.approx(51.0)
    print("✓ Motion step matches CV")


def test_step_jacobian_matches_finite_differences():
    """Test the state Jacobian of a random second-order step against central differences."""
    torch.manual_seed(0)
    nets = OdeNetworks().double()
    u = torch.tensor([0.4, -0.9], dtype=DT)
    state = torch.tensor([1.0, 2.0, 8.0, -1.0], dtype=DT)

    def advance(x):
        return step(x, u, nets, 0.2)

    analytic = jacobian(advance, state)
    numeric = torch.zeros(4, 4, dtype=DT)
    h = 1e-6
    for j in range(4):
        offset = torch.zeros(4, dtype=DT)
        offset[j] = h
        numeric[:, j] = (advance(state + offset) - advance(state - offset)) / (2 * h)
    scale = torch.maximum(analytic.abs(), numeric.abs()).clamp_min(1e-3)
    assert ((analytic - numeric).abs() / scale).max().item() < 1e-5


def test_step_continuous_in_input():
    """Test that a small input change moves the next state by a comparable amount."""
    torch.manual_seed(1)
    nets = OdeNetworks().double()
    state = torch.tensor([0.0, 0.0, 5.0, 0.0], dtype=DT)
    u = torch.tensor([0.1, 0.2], dtype=DT)
    base = step(state, u, nets, 0.2)
    for eps in (1e-3, 1e-5):
        moved = step(state, u + eps, nets, 0.2)
        assert (moved - base).abs().max().item() < 100 * eps


def test_static_one_hot_widens_network_input():
    """Test that category one-hots are appended to the network inputs."""
    model = MotionModel(MotionOrder.SECOND, 0.2, static_width=5).double()
    assert model.nets.f1[0].in_features == 8
    states = torch.randn(3, 2, 4, dtype=DT)
    static = torch.nn.functional.one_hot(torch.tensor([0, 2, 4]), 5).to(DT)
    out = model.transition(static)(0, states, torch.zeros(3, 2, 2, dtype=DT))
    assert out.shape == (3, 2, 4)


def test_step_errors():
    """Test invalid sample times, state widths and non-finite results."""
    nets = zero_nets()
    with pytest.raises(ValueError):
        step(torch.zeros(4, dtype=DT), torch.zeros(2, dtype=DT), nets, 0.0)
    with pytest.raises(ValueError):
        step(torch.zeros(3, dtype=DT), torch.zeros(2, dtype=DT), nets, 0.2)
    with pytest.raises(NumericalError):
        step(torch.tensor([0.0, 0.0, float('inf'), 0.0], dtype=DT), torch.zeros(2, dtype=DT), nets, 0.2)
    with pytest.raises(ValueError):
        MotionOrder.from_int(3)


def test_cv_predict():
    """Test constant-velocity extrapolation."""
    path = cv_predict([0.0, 0.0], [10.0, 0.0], 0.2, 25)
    assert path.shape == (25, 2)
    assert path[-1].tolist() == pytest.approx([50.0, 0.0])
    assert torch.allclose(path[9], 2 * path[4])
    still = cv_predict([3.0, 4.0], [0.0, 0.0], 0.2, 5)
    assert torch.allclose(still, torch.tensor([[3.0, 4.0]] * 5, dtype=DT))


def test_ca_predict():
    """Test constant-acceleration extrapolation against CV."""
    path = ca_predict([0.0, 0.0], [10.0, 0.0], [2.0, 0.0], 0.2, 25)
    assert path[-1, 0].item() == pytest.approx(75.0)
    cv = cv_predict([0.0, 0.0], [10.0, 0.0], 0.2, 25)
    assert torch.allclose(ca_predict([0.0, 0.0], [10.0, 0.0], [0.0, 0.0], 0.2, 25), cv)
    t = torch.arange(1, 26, dtype=DT) * 0.2
    assert torch.allclose(path[:, 0] - cv[:, 0], 0.5 * 2.0 * t ** 2)
    with pytest.raises(ValueError):
        ca_predict([0.0, 0.0], [1.0, 0.0], [0.0, 0.0], -0.2, 5)
    print("✓ Baselines work")


if __name__ == "__main__":
    test_zero_networks_are_stationary()
    test_zero_networks_match_constant_velocity()
    test_ca_predict()
    print("\n✅ Motion tests passed!")
