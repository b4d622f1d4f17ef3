"""Multifidelity Monte Carlo estimation of Sobol' sensitivity indices for a
common carotid artery model (1D pulse-wave and 0D lumped solvers)."""

from .errors import (
    AllocationError,
    BudgetTooSmallError,
    ConfigError,
    DegenerateStatisticsError,
    DomainError,
    LeastSquaresError,
    MfsobolError,
    SolverError,
    StageOrderError,
    UnsupportedDimensionError,
)
from .sampling import ParameterSpace, SampleBundle, build_bundle, carotid_space, sobol_points

__version__ = "0.1.0"

__all__ = [
    "AllocationError",
    "BudgetTooSmallError",
    "ConfigError",
    "DegenerateStatisticsError",
    "DomainError",
    "LeastSquaresError",
    "MfsobolError",
    "ParameterSpace",
    "SampleBundle",
    "SolverError",
    "StageOrderError",
    "UnsupportedDimensionError",
    "build_bundle",
    "carotid_space",
    "sobol_points",
]
