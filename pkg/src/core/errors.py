"""
Exception hierarchy shared by every subpackage.
"""


class ForecastError(Exception):
    """Base class for all errors raised by the forecaster."""


class ConfigurationError(ForecastError, ValueError):
    """Invalid or conflicting configuration."""


class DataFormatError(ForecastError, ValueError):
    """Input data that does not follow the documented formats."""


class NumericalError(ForecastError, ArithmeticError):
    """A computation produced non-finite or otherwise unusable values."""

    def __init__(self, operation: str, detail: str = ""):
        self.operation = operation
        message = f"{operation} produced non-finite values"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class TrainingDiverged(NumericalError):
    """Training loss became non-finite; carries the last good checkpoint."""

    def __init__(self, epoch: int, checkpoint=None):
        self.epoch = epoch
        self.checkpoint = checkpoint
        super().__init__("training loss", f"diverged at epoch {epoch}")
