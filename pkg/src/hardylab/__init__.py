"""Numerical laboratory for the weighted parabolic p-Laplacian with Hardy-type weights."""

__version__ = "0.1.0"

from .mesh import Interval, Mesh1D, Radial, build_mesh, gradient, integrate, nodal_integrate
from .weights import (
    Constant,
    DistanceBoundary,
    PowerRadial,
    Scaled,
    Tabulated,
    Truncated,
    WeightPair,
    check_admissibility,
    eval_weight,
    truncate,
    truncate_weight,
)
from .operators import (
    apply_plap,
    dirichlet_energy,
    energy_breakdown,
    l2_squared,
    mass_energy,
    pairing_L_lambda,
    quotient,
)
from .eigensolver import minimize_rayleigh, truncated_eigen_study
from .parabolic import EvolutionConfig, evolve, step_implicit, sweep_lambda, truncation_family_study

__all__ = [
    "Constant", "DistanceBoundary", "EvolutionConfig", "Interval", "Mesh1D", "PowerRadial",
    "Radial", "Scaled", "Tabulated", "Truncated", "WeightPair", "apply_plap", "build_mesh",
    "check_admissibility", "dirichlet_energy", "energy_breakdown", "eval_weight", "evolve",
    "gradient", "integrate", "l2_squared", "mass_energy", "minimize_rayleigh", "nodal_integrate",
    "pairing_L_lambda", "quotient", "step_implicit", "sweep_lambda", "truncate",
    "truncate_weight", "truncated_eigen_study", "truncation_family_study",
]
