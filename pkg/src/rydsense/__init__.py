"""Steady-state density-matrix modeling of Rydberg-atom EIT field sensors."""

__version__ = "0.1.0"

from .core import Coupling, DephasingBudget, LadderScheme, Level, SteadyState, steady_state  # noqa: E402
from .errors import (  # noqa: E402
    ConfigError,
    DegenerateSteadyStateError,
    NoPeakError,
    RydsenseError,
    SolverError,
    UndefinedSNRError,
    UnmeasurableError,
    UnresolvedSplittingError,
    ValidationError,
)
from .spectroscopy import CellConditions, SpectralTrace, doppler_averaged_trace, make_velocity_grid  # noqa: E402

__all__ = [
    "__version__",
    "CellConditions",
    "ConfigError",
    "Coupling",
    "DegenerateSteadyStateError",
    "DephasingBudget",
    "LadderScheme",
    "Level",
    "NoPeakError",
    "RydsenseError",
    "SolverError",
    "SpectralTrace",
    "SteadyState",
    "UndefinedSNRError",
    "UnmeasurableError",
    "UnresolvedSplittingError",
    "ValidationError",
    "doppler_averaged_trace",
    "make_velocity_grid",
    "steady_state",
]
