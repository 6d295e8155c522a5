"""Energy-efficient power loading for an OFDM cognitive-radio secondary user.

Sensing errors and imperfect channel estimates enter through statistical
interference caps and an effective-noise capacity model; the energy-per-bit
ratio is minimised by Dinkelbach iteration over a KKT closed-form inner solve.
"""

from .errors import (
    BisectionStall,
    ConfigError,
    CrPowerLoadError,
    DegenerateProfile,
    DistanceBelowReference,
    MaxIterations,
    NotConverged,
    SolverError,
    ValidationFailure,
    ZeroPosterior,
    ZeroRate,
)
from .problem import Allocation, ProblemInstance, capacity, energy_efficiency, parametric_objective
from .solver import SolverOptions, SolveTrace, solve, solve_inner

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "BisectionStall",
    "ConfigError",
    "CrPowerLoadError",
    "DegenerateProfile",
    "DistanceBelowReference",
    "MaxIterations",
    "NotConverged",
    "ProblemInstance",
    "SolveTrace",
    "SolverError",
    "SolverOptions",
    "ValidationFailure",
    "ZeroPosterior",
    "ZeroRate",
    "capacity",
    "energy_efficiency",
    "parametric_objective",
    "solve",
    "solve_inner",
    "__version__",
]
