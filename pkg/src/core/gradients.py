"""
Reverse-mode gradients and the finite-difference oracle that checks them.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import torch

from .errors import NumericalError
from .params import GradientRecord, ParameterSet

logger = logging.getLogger(__name__)

LossFn = Callable[[ParameterSet], torch.Tensor]

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4


def evaluate_with_gradients(
    loss_fn: LossFn,
    params: ParameterSet,
    detect_anomaly: bool = True,
) -> Tuple[float, GradientRecord]:
    """
    Evaluate a scalar loss and its exact gradients with respect to every parameter.

    Args:
        loss_fn: Function of a ParameterSet returning a scalar tensor
        params: Point of evaluation (left untouched)
        detect_anomaly: Run the backward pass under autograd anomaly
            detection so a non-finite gradient names the operation that made it

    Returns:
        (loss value, gradients)

    Raises:
        NumericalError: If the loss or any gradient is non-finite
    """
    leaves = params.requiring_grad()
    with torch.autograd.set_detect_anomaly(detect_anomaly, check_nan=detect_anomaly):
        loss = loss_fn(leaves)
        if loss.dim() != 0:
            raise ValueError(f"loss_fn must return a scalar, got shape {tuple(loss.shape)}")
        if not torch.isfinite(loss):
            raise NumericalError("loss evaluation", f"value {loss.item()}")
        try:
            grads = torch.autograd.grad(
                loss, [leaves[name] for name in leaves.names], allow_unused=True
            )
        except RuntimeError as exc:
            # anomaly mode reports the failing backward function by name
            raise NumericalError("backward pass", str(exc).splitlines()[0]) from exc

    record = GradientRecord.matching(leaves, dict(zip(leaves.names, grads)))
    if not record.is_finite():
        bad = [name for name in record.names if not bool(torch.isfinite(record[name]).all())]
        raise NumericalError("backward pass", f"non-finite gradient for {', '.join(bad)}")
    return float(loss.detach()), record


def finite_difference_oracle(
    loss_fn: LossFn,
    params: ParameterSet,
    step: float = DEFAULT_STEP,
    coordinates: Optional[Dict[str, Sequence[int]]] = None,
) -> GradientRecord:
    """
    Central-difference gradient estimate (f(θ+h) - f(θ-h)) / 2h per coordinate.

    Args:
        loss_fn: Function of a ParameterSet returning a scalar tensor
        params: Point of evaluation
        step: Perturbation h, must be positive
        coordinates: Optional flat indices to check per parameter name;
            coordinates not checked are left at zero

    Returns:
        GradientRecord with the estimates
    """
    if step <= 0:
        raise ValueError(f"Finite-difference step must be positive, got {step}")

    base = params.flatten().detach().clone()
    estimate = torch.zeros_like(base)
    offsets = _offsets(params)

    with torch.no_grad():
        for name in params.names:
            start, size = offsets[name]
            indices = range(size) if coordinates is None else coordinates.get(name, ())
            for index in indices:
                flat = start + int(index)
                original = base[flat].item()
                base[flat] = original + step
                plus = loss_fn(params.unflatten(base.clone()))
                base[flat] = original - step
                minus = loss_fn(params.unflatten(base.clone()))
                base[flat] = original
                estimate[flat] = (plus - minus) / (2.0 * step)

    unflat = params.unflatten(estimate)
    return GradientRecord(unflat.as_dict())


def relative_error(analytic: torch.Tensor, numeric: torch.Tensor, floor: float = 1e-3) -> torch.Tensor:
    """|a - n| / max(|a|, |n|, floor), elementwise."""
    scale = torch.maximum(analytic.abs(), numeric.abs()).clamp_min(floor)
    return (analytic - numeric).abs() / scale


@dataclass
class GradientCheckReport:
    """Outcome of comparing analytic gradients against the oracle."""
    tolerance: float
    loss: float
    max_error: float
    worst_parameter: str
    per_parameter: Dict[str, float] = field(default_factory=dict)
    coordinates_checked: int = 0

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance

    def failures(self) -> List[str]:
        return [name for name, err in self.per_parameter.items() if err >= self.tolerance]

    def get_summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [
            f"Gradient check: {status}",
            f"Loss: {self.loss:.10g}",
            f"Coordinates checked: {self.coordinates_checked}",
            f"Max relative error: {self.max_error:.3e} (tolerance {self.tolerance:.1e})",
            f"Worst parameter: {self.worst_parameter}",
        ]
        return "\n".join(lines)


def sample_coordinates(params: ParameterSet, per_parameter: Optional[int], seed: int = 0) -> Optional[Dict[str, List[int]]]:
    """Pick up to ``per_parameter`` flat indices from each tensor; None keeps all."""
    if per_parameter is None:
        return None
    generator = torch.Generator().manual_seed(seed)
    picked = {}
    for name in params.names:
        size = params[name].numel()
        if size <= per_parameter:
            picked[name] = list(range(size))
        else:
            picked[name] = sorted(torch.randperm(size, generator=generator)[:per_parameter].tolist())
    return picked


def check_gradients(
    loss_fn: LossFn,
    params: ParameterSet,
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    per_parameter: Optional[int] = None,
    seed: int = 0,
    corrupt: bool = False,
) -> GradientCheckReport:
    """
    Compare reverse-mode gradients with central differences.

    Args:
        loss_fn: Scalar loss of a ParameterSet
        params: Point of evaluation, ideally float64
        step: Finite-difference step
        tolerance: Maximum accepted relative error
        per_parameter: Coordinates checked per tensor (None = every coordinate)
        seed: Seed for the coordinate sample
        corrupt: Perturb the analytic gradient before comparing (negative control)

    Returns:
        GradientCheckReport
    """
    loss, analytic = evaluate_with_gradients(loss_fn, params)
    coordinates = sample_coordinates(params, per_parameter, seed)
    numeric = finite_difference_oracle(loss_fn, params, step, coordinates)

    if corrupt:
        name = analytic.names[0]
        tensors = analytic.as_dict()
        tensors[name] = tensors[name] + 1.0
        analytic = GradientRecord(tensors)

    per_parameter_error = {}
    checked = 0
    for name in params.names:
        a = analytic[name].reshape(-1)
        n = numeric[name].reshape(-1)
        idx = list(range(a.numel())) if coordinates is None else coordinates[name]
        if not idx:
            continue
        sel = torch.as_tensor(idx, dtype=torch.long)
        err = relative_error(a[sel], n[sel])
        per_parameter_error[name] = float(err.max())
        checked += len(idx)

    worst = max(per_parameter_error, key=per_parameter_error.get) if per_parameter_error else ""
    report = GradientCheckReport(
        tolerance=tolerance,
        loss=loss,
        max_error=per_parameter_error.get(worst, 0.0),
        worst_parameter=worst,
        per_parameter=per_parameter_error,
        coordinates_checked=checked,
    )
    logger.info("gradient check over %d coordinates: max relative error %.3e (%s)",
                checked, report.max_error, worst or "-")
    return report


def _offsets(params: ParameterSet) -> Dict[str, Tuple[int, int]]:
    offsets = {}
    start = 0
    for name in params.names:
        size = params[name].numel()
        offsets[name] = (start, size)
        start += size
    return offsets
