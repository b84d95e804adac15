"""Glue between a user-facing :class:`GroupedProblem` and the solver's
working representation, and back again."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.special import expit

from .design import (
    ExpandedProblem,
    GroupedProblem,
    collapse_coefficients,
    expand_overlap,
    orthogonalize,
    standardize,
)
from .penalty import PenaltyConfig
from .solver import GroupSolver, SolverOptions


@dataclass(frozen=True)
class FittedModel:
    """Coefficients on the original columns.

    ``latent`` maps each active group to its own coefficient vector over
    that group's columns; ``coef`` is their sum per column.
    """

    coef: NDArray
    intercept: float
    latent: dict[int, NDArray]
    task: str

    @property
    def active_groups(self) -> list[int]:
        return sorted(self.latent)

    def decision_function(self, X) -> NDArray:
        return np.asarray(X, dtype=float) @ self.coef + self.intercept

    def predict(self, X) -> NDArray:
        eta = self.decision_function(X)
        return expit(eta) if self.task == "logistic" else eta


class PreparedProblem:
    """Standardized, expanded (and optionally orthogonalized) problem with
    a solver attached.

    ``expand=False`` skips the replication step; it is only allowed for
    disjoint groups and exists so the two routes can be compared.
    """

    def __init__(self, problem: GroupedProblem, orthogonalize_groups: bool = False,
                 expand: bool = True, options: SolverOptions | None = None):
        self.problem = problem
        std, self.scaling = standardize(problem)
        self.standardized = std
        if expand:
            self.expanded = expand_overlap(std)
        else:
            if not std.is_disjoint():
                raise ValueError("expand=False requires disjoint groups")
            self.expanded = ExpandedProblem(
                Xt=std.X, y=std.y, groups=std.groups,
                back_map=np.arange(std.p), task=std.task,
                group_sizes=std.group_sizes, weights=std.weights, p_original=std.p,
            )
        if orthogonalize_groups:
            self.working, self.ortho = orthogonalize(self.expanded)
        else:
            self.working, self.ortho = self.expanded, None
        self.solver = GroupSolver(self.working.Xt, self.working.y, self.working.groups,
                                  self.working.task, options=options)

    @property
    def n_groups(self) -> int:
        return self.solver.n_groups

    def penalty(self, lambda0: float = 0.0, lambda1: float = 0.0, lambda2: float = 0.0,
                shrink: str = "none") -> PenaltyConfig:
        return PenaltyConfig.build(lambda0, lambda1, lambda2, shrink,
                                   self.expanded.group_sizes, self.expanded.weights)

    def latent_standardized(self, theta: NDArray) -> NDArray:
        """Working coefficients -> latent coefficients on expanded standardized columns."""
        if self.ortho is None:
            return np.asarray(theta, dtype=float)
        return self.ortho.to_source(theta, self.working.groups)

    def to_original(self, theta: NDArray, intercept: float = 0.0) -> FittedModel:
        nu = self.latent_standardized(theta)
        back = self.expanded.back_map
        scale = self.scaling.x_scale
        nu_orig = nu / scale[back]
        active = self.solver.active_groups(np.asarray(theta))
        latent = {}
        for k in active:
            g = list(self.expanded.groups[k])
            latent[int(k)] = nu_orig[g]
        coef = collapse_coefficients(self.expanded, nu_orig)
        b0 = self.scaling.y_mean + intercept - float(self.scaling.x_mean @ coef)
        return FittedModel(coef, float(b0), latent, self.problem.task)
