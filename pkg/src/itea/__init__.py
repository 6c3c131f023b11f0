"""Symbolic regression with interaction-transformation expressions.

The search space is restricted to affine combinations of univariate
transformations applied to integer-power interactions of the original
variables. Two search strategies are provided (a mutation-only
evolutionary algorithm and a greedy breadth-style tree search) along with
exact analytical feature importances for any fitted expression.
"""

from .expr import Individual, Term, feature_matrix, predict, render
from .evolution import EvolutionConfig, RunResult, evolve
from .fitting import FitConfig, fit, rmse
from .transforms import DEFAULT_TRANSFORMS, DomainError

__version__ = "0.1.0"

__all__ = [
    "Individual",
    "Term",
    "feature_matrix",
    "predict",
    "render",
    "EvolutionConfig",
    "RunResult",
    "evolve",
    "FitConfig",
    "fit",
    "rmse",
    "DEFAULT_TRANSFORMS",
    "DomainError",
    "__version__",
]
