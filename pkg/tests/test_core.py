"""
Tests for the differentiable core: primitives, parameter sets, gradient checks.
"""
import math
import os
import sys

import pytest
import torch

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.core import (  # noqa: E402
    PRIMITIVES,
    DataFormatError,
    NumericalError,
    ParameterSet,
    check_gradients,
    evaluate_with_gradients,
    finite_difference_oracle,
    huber,
    load_parameters,
    relative_error,
    save_parameters,
    sigmoid,
    softplus,
    softsign,
)


def test_primitive_values():
    """Test the closed-form values of the primitives."""
    zero = torch.zeros(1, dtype=torch.float64)
    assert softplus(zero).item() == pytest.approx(math.log(2.0))
    assert softsign(torch.tensor([1.0], dtype=torch.float64)).item() == pytest.approx(0.5)
    assert huber(torch.tensor([0.5], dtype=torch.float64)).item() == pytest.approx(0.125)
    assert huber(torch.tensor([2.0], dtype=torch.float64)).item() == pytest.approx(1.5)
    assert huber(torch.tensor([-2.0], dtype=torch.float64)).item() == pytest.approx(1.5)
    print("✓ Primitive values work")


def test_sigmoid_derivative_at_zero():
    """Test that autograd gives sigmoid'(0) = 1/4."""
    x = torch.zeros(1, dtype=torch.float64, requires_grad=True)
    sigmoid(x).backward()
    assert x.grad.item() == pytest.approx(0.25)


def test_every_primitive_matches_finite_differences():
    """Test each primitive's gradient against central differences."""
    x = torch.tensor([-1.7, -0.3, 0.4, 2.2], dtype=torch.float64)
    for name, fn in PRIMITIVES.items():
        params = ParameterSet({'x': x.clone()})

        def loss(p, fn=fn):
            return (fn(p['x']) * torch.arange(1, 5, dtype=torch.float64)).sum()

        report = check_gradients(loss, params, tolerance=1e-5)
        assert report.passed, f"{name}: {report.get_summary()}"


def test_squared_norm_gradient():
    """Test that the gradient of sum(theta^2) is 2*theta."""
    theta = torch.tensor([[1.0, -2.0], [0.5, 3.0]], dtype=torch.float64)
    params = ParameterSet({'theta': theta})
    loss, grads = evaluate_with_gradients(lambda p: (p['theta'] ** 2).sum(), params)
    assert loss == pytest.approx(14.25)
    assert torch.allclose(grads['theta'], 2 * theta)
    numeric = finite_difference_oracle(lambda p: (p['theta'] ** 2).sum(), params)
    assert torch.allclose(numeric['theta'], 2 * theta, atol=1e-8)
    print("✓ Gradient evaluation works")


def test_unused_parameter_gets_zero_gradient():
    """Test that a parameter the loss never touches reports zeros."""
    params = ParameterSet({
        'used': torch.ones(3, dtype=torch.float64),
        'unused': torch.ones(2, dtype=torch.float64),
    })
    _, grads = evaluate_with_gradients(lambda p: p['used'].sum(), params)
    assert grads.is_congruent(params)
    assert torch.equal(grads['unused'], torch.zeros(2, dtype=torch.float64))


def test_non_finite_loss_raises():
    """Test that a non-finite loss is reported as a numerical error."""
    params = ParameterSet({'x': torch.zeros(1, dtype=torch.float64)})
    with pytest.raises(NumericalError):
        evaluate_with_gradients(lambda p: torch.log(p['x']).sum(), params)


def test_flatten_roundtrip():
    """Test that unflatten inverts flatten and keeps names and shapes."""
    params = ParameterSet({
        'a': torch.arange(6, dtype=torch.float64).reshape(2, 3),
        'b': torch.tensor([7.0], dtype=torch.float64),
    })
    again = params.unflatten(params.flatten())
    assert again.names == ('a', 'b')
    assert again.shapes == {'a': (2, 3), 'b': (1,)}
    assert torch.equal(again['a'], params['a'])
    with pytest.raises(ValueError):
        params.unflatten(torch.zeros(3))


def test_relative_error_floor():
    """Test that tiny gradients are compared against the absolute floor."""
    err = relative_error(torch.tensor([1e-9]), torch.tensor([0.0]))
    assert err.item() == pytest.approx(1e-6)
    err = relative_error(torch.tensor([2.0]), torch.tensor([1.0]))
    assert err.item() == pytest.approx(0.5)


def test_corrupted_gradient_fails_check():
    """Test the negative control of the gradient check."""
    params = ParameterSet({'x': torch.tensor([0.3, -0.8], dtype=torch.float64)})
    report = check_gradients(lambda p: torch.tanh(p['x']).sum(), params, corrupt=True)
    assert not report.passed
    assert report.worst_parameter == 'x'
    assert "FAIL" in report.get_summary()


def test_sampled_coordinates_are_counted():
    """Test that per-parameter sampling checks only the requested coordinates."""
    params = ParameterSet({
        'big': torch.linspace(-1, 1, 50, dtype=torch.float64),
        'small': torch.ones(3, dtype=torch.float64),
    })
    report = check_gradients(lambda p: (p['big'] ** 3).sum() + p['small'].prod(), params, per_parameter=5)
    assert report.passed
    assert report.coordinates_checked == 5 + 3


def test_parameter_file_roundtrip(tmp_path):
    """Test that saved parameters load back bit-exactly with their metadata."""
    state = {'w': torch.randn(3, 4, dtype=torch.float64), 'b': torch.zeros(4, dtype=torch.float64)}
    path = tmp_path / "params.pt"
    save_parameters(path, state, {'epoch': 3})
    tensors, metadata = load_parameters(path)
    assert list(tensors) == ['w', 'b']
    assert torch.equal(tensors['w'], state['w'])
    assert metadata == {'epoch': 3}
    print("✓ Parameter files work")


def test_foreign_file_rejected(tmp_path):
    """Test that a file of another format is refused."""
    path = tmp_path / "other.pt"
    torch.save({'format': 'something-else'}, str(path))
    with pytest.raises(DataFormatError):
        load_parameters(path)


if __name__ == "__main__":
    test_primitive_values()
    test_squared_norm_gradient()
    test_flatten_roundtrip()
    print("\n✅ Core tests passed!")
