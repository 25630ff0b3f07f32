"""Exception hierarchy shared by all modules."""


class FRFilterError(Exception):
    """Base class for library errors."""


class NotSPDError(FRFilterError, ValueError):
    """Matrix is not symmetric positive definite (or lost definiteness)."""


class DimensionError(FRFilterError, ValueError):
    """Operand shapes are incompatible."""


class GridMismatchError(FRFilterError, ValueError):
    """Two grid densities do not live on the same grid."""


class ConvergenceError(FRFilterError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ConfigError(FRFilterError, ValueError):
    """Experiment configuration failed validation.

    ``field`` names the offending entry of the JSON document.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
