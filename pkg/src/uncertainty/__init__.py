"""Covariance propagation with the EKF time update."""
from .ekf import (
    PSD_TOLERANCE,
    EkfBelief,
    ProcessNoise,
    build_G,
    build_Q,
    clamp_psd,
    ekf_time_update,
    propagate_component,
    stack_beliefs,
    state_jacobian,
    symmetrize,
)

__all__ = [
    'PSD_TOLERANCE',
    'EkfBelief',
    'ProcessNoise',
    'build_G',
    'build_Q',
    'clamp_psd',
    'ekf_time_update',
    'propagate_component',
    'stack_beliefs',
    'state_jacobian',
    'symmetrize',
]
