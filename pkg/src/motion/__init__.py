"""Motion models: learned ODEs, the RK4 step and analytic baselines."""
from .ode import (
    DERIVATIVES,
    MotionModel,
    MotionOrder,
    OdeNetworks,
    broadcast_static,
    derivative_first_order,
    derivative_second_order,
    ode_network,
    rk4_step,
    step,
)
from .baselines import ca_predict, cv_predict

__all__ = [
    'DERIVATIVES',
    'MotionModel',
    'MotionOrder',
    'OdeNetworks',
    'broadcast_static',
    'derivative_first_order',
    'derivative_second_order',
    'ode_network',
    'rk4_step',
    'step',
    'ca_predict',
    'cv_predict',
]
