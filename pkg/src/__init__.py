"""Traffic Forecaster - multimodal graph-ODE trajectory forecasting."""
__version__ = "0.1.0"
