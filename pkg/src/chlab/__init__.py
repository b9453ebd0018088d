"""chlab: a numerical laboratory for coupled Cahn-Hilliard / Cahn-Hilliard-Oono
dynamics with the singular Flory-Huggins potential on Neumann rectangles."""

from .errors import (
    BoundViolation,
    ChlabError,
    ConfigError,
    DomainViolation,
    EmptyTrajectory,
    GridMismatch,
    InsufficientCoverage,
    MeanInfeasible,
    NewtonDiverged,
    NonZeroMean,
)
from .potentials import Parameters, PotentialSpec
from .solver import SchemeConfig, State, StepStats, initial_state, run, solve_implicit_system, step
from .spectral_core import Grid, ScalarField, SpectralField

__all__ = [
    "BoundViolation",
    "ChlabError",
    "ConfigError",
    "DomainViolation",
    "EmptyTrajectory",
    "Grid",
    "GridMismatch",
    "InsufficientCoverage",
    "MeanInfeasible",
    "NewtonDiverged",
    "NonZeroMean",
    "Parameters",
    "PotentialSpec",
    "ScalarField",
    "SchemeConfig",
    "SpectralField",
    "State",
    "StepStats",
    "initial_state",
    "run",
    "solve_implicit_system",
    "step",
]

__version__ = "0.1.0"
