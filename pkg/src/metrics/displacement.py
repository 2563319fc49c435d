"""
Displacement metrics on predicted and true position sequences.

All functions accept (..., t_f, 2) arrays and reduce over the horizon.
"""
import numpy as np

MISS_THRESHOLD = 2.0


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"Prediction shape {pred.shape} does not match truth shape {truth.shape}")
    if pred.shape[-2] == 0:
        raise ValueError("Empty prediction horizon")
    return pred, truth


def displacement(pred, truth) -> np.ndarray:
    """(..., t_f) Euclidean error at every step."""
    pred, truth = _pair(pred, truth)
    return np.linalg.norm(pred - truth, axis=-1)


def ade(pred, truth):
    """Average displacement error over the horizon."""
    return displacement(pred, truth).mean(axis=-1)


def fde(pred, truth):
    """Displacement error at the final step."""
    return displacement(pred, truth)[..., -1]


def miss_rate(final_errors, threshold: float = MISS_THRESHOLD) -> float:
    """Fraction of final errors strictly above ``threshold`` metres."""
    final_errors = np.asarray(final_errors, dtype=np.float64).reshape(-1)
    if final_errors.size == 0:
        raise ValueError("Miss rate of an empty set of errors")
    return float(np.mean(final_errors > threshold))


def apde(pred, truth):
    """
    Average path displacement error: for each predicted point the distance
    to the closest of the true horizon points, averaged over the horizon.
    """
    pred, truth = _pair(pred, truth)
    # (..., k, i) distance from predicted point k to true point i
    gaps = np.linalg.norm(pred[..., :, None, :] - truth[..., None, :, :], axis=-1)
    return gaps.min(axis=-1).mean(axis=-1)
