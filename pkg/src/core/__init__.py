"""Differentiable-computation core: parameters, gradients, primitives."""
from .errors import (
    ConfigurationError,
    DataFormatError,
    ForecastError,
    NumericalError,
    TrainingDiverged,
)
from .params import (
    GradientRecord,
    ParameterSet,
    load_parameters,
    save_parameters,
)
from .gradients import (
    GradientCheckReport,
    check_gradients,
    evaluate_with_gradients,
    finite_difference_oracle,
    relative_error,
)
from .activations import (
    PRIMITIVES,
    elu,
    huber,
    leaky_relu,
    sigmoid,
    softmax,
    softplus,
    softsign,
    tanh,
)

__all__ = [
    'ConfigurationError',
    'DataFormatError',
    'ForecastError',
    'NumericalError',
    'TrainingDiverged',
    'GradientRecord',
    'ParameterSet',
    'load_parameters',
    'save_parameters',
    'GradientCheckReport',
    'check_gradients',
    'evaluate_with_gradients',
    'finite_difference_oracle',
    'relative_error',
    'PRIMITIVES',
    'elu',
    'huber',
    'leaky_relu',
    'sigmoid',
    'softmax',
    'softplus',
    'softsign',
    'tanh',
]
