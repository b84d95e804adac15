"""Group subset selection with optional group lasso or ridge shrinkage.

Coordinate descent with local search over (possibly overlapping) groups
of predictors, regularization paths with cross-validation, an exhaustive
reference solver for small problems and a semiparametric spline front-end.
"""

from .design import GroupedProblem, collapse_coefficients, expand_overlap, orthogonalize, standardize
from .local_search import LocalSearchOptions, fit_with_local_search, local_search_step
from .losses import group_gradient, lipschitz_constant, loss_value
from .metrics import evaluate_metrics, f1_score, relative_estimation_error
from .oracle import optimality_gap, solve_exhaustive
from .path import CvResult, PathResult, PathSpec, cross_validate, fit_path, lambda0_path, next_lambda0
from .penalty import PenaltyConfig, omega, threshold
from .pipeline import FittedModel, PreparedProblem
from .semiparam import SplineExpansion, alpha_grid_cv, build_spline_groups, classify_functions
from .solver import GroupSolver, SolverOptions
from .synthetic import SyntheticDesign, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "CvResult", "FittedModel", "GroupSolver", "GroupedProblem", "LocalSearchOptions", "PathResult",
    "PathSpec", "PenaltyConfig", "PreparedProblem", "SolverOptions", "SplineExpansion",
    "SyntheticDesign", "alpha_grid_cv", "build_spline_groups", "classify_functions",
    "collapse_coefficients", "cross_validate", "evaluate_metrics", "expand_overlap", "f1_score",
    "fit_path", "fit_with_local_search", "generate_synthetic", "group_gradient", "lambda0_path",
    "lipschitz_constant", "local_search_step", "loss_value", "next_lambda0", "omega",
    "optimality_gap", "orthogonalize", "relative_estimation_error", "solve_exhaustive",
    "standardize", "threshold",
]
