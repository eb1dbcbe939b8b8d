"""Simulation laboratory for the regularized stochastic logarithmic Schroedinger equation."""

__version__ = "0.1.0"

from .errors import ConfigurationError, DomainError, ParameterError
from .grid import Boundary, ComplexField, Grid
from .noise import GFamily, GKind, NoiseCase, NoiseSpec, Spectrum
from .regularization import EquationSpec, Family, RegKind
from .solver import Scheme, SolverConfig, Status, evolve

__all__ = [
    "Boundary", "ComplexField", "ConfigurationError", "DomainError", "EquationSpec", "Family",
    "GFamily", "GKind", "Grid", "NoiseCase", "NoiseSpec", "ParameterError", "RegKind", "Scheme",
    "SolverConfig", "Spectrum", "Status", "evolve",
]
