"""Command-line entry point."""
from .app import ForecastCLI, build_parser, main, write_forecasts
from .config import CliConfig, build_config, load_config, read_config_file

__all__ = [
    'ForecastCLI',
    'build_parser',
    'main',
    'write_forecasts',
    'CliConfig',
    'build_config',
    'load_config',
    'read_config_file',
]
