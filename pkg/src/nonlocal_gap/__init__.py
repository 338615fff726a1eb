"""Spectral analysis of the non-local Neumann dispersal operator.

``(L v)(x) = int_Omega J(x - y) (v(y) - v(x)) dy`` on a bounded union of
boxes.  The package computes the continuous spectrum ``{-b(x)}``, checks
sufficient conditions for an isolated eigenvalue above it, and
approximates the leading eigenpairs by a Galerkin method.
"""

from . import band, domain, galerkin, gap, kernel, linalg, quadrature
from .band import SpectralBand, continuous_spectrum, retained_mass, retained_mass_scaling_study
from .domain import Domain, Partition
from .exceptions import (
    BracketError,
    ConfigError,
    ConvergenceError,
    EvaluationError,
    IllConditionedBasisError,
    InvalidInputError,
    MomentDivergenceError,
    NonlocalGapError,
    SplitError,
)
from .galerkin import apply_operator, assemble, build_basis, converge, solve
from .gap import (
    ExampleExpReport,
    GapReport,
    check_cross_mass,
    check_lipschitz_k,
    check_variance,
    example_exp_delta,
    example_exp_threshold,
    linear_testfunction_bound,
)
from .kernel import Kernel, check_assumptions, gaussian, generalized_exponential, normalize, tabulated, tent

__version__ = "0.1.0"

__all__ = [
    "BracketError", "ConfigError", "ConvergenceError", "Domain", "EvaluationError",
    "ExampleExpReport", "GapReport", "IllConditionedBasisError", "InvalidInputError", "Kernel",
    "MomentDivergenceError", "NonlocalGapError", "Partition", "SpectralBand", "SplitError",
    "apply_operator", "assemble", "band", "build_basis", "check_assumptions", "check_cross_mass",
    "check_lipschitz_k", "check_variance", "continuous_spectrum", "converge", "domain",
    "example_exp_delta", "example_exp_threshold", "galerkin", "gap", "gaussian",
    "generalized_exponential", "kernel", "linalg", "linear_testfunction_bound", "normalize",
    "quadrature", "retained_mass", "retained_mass_scaling_study", "solve", "tabulated", "tent",
]
