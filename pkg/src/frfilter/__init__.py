"""Fisher-Rao proximal filtering for linear Gaussian models.

Submodules
----------
matfun      SPD matrix functions, Kronecker tools, log Frechet derivative
frgeom      Fisher-Rao distances, geodesics and Fisher information
proxfilter  proximal measurement update and propagation
reference   SDE simulation, Kalman-Bucy oracle, stationary Riccati solver
bench       experiment configs, convergence and geometry studies, self-tests
"""

from .errors import (
    ConfigError,
    ConvergenceError,
    DimensionError,
    FRFilterError,
    GridMismatchError,
    NotSPDError,
)
from .models import FilterRun, GaussianState, LinearGaussianModel, Trajectory

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DimensionError",
    "FRFilterError",
    "FilterRun",
    "GaussianState",
    "GridMismatchError",
    "LinearGaussianModel",
    "NotSPDError",
    "Trajectory",
]
