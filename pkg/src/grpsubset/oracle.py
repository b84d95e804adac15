"""Global minimizer by exhaustive enumeration of group subsets.

Only meant for small problems, as a reference for the heuristic solvers.
Every subset S gets its restricted convex fit (loss plus any shrinkage,
no subset penalty); the objective of the resulting vector is then the
true objective, so the minimum over subsets is the global minimum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .penalty import PenaltyConfig
from .solver import GroupSolver, SolverOptions

TIE_TOL = 1e-12


@dataclass
class OracleResult:
    best_subset: tuple[int, ...]
    best_beta: NDArray
    best_intercept: float
    best_objective: float
    subsets_enumerated: int


def count_subsets(g: int, max_active: int) -> int:
    return sum(math.comb(g, m) for m in range(max_active + 1))


def _restricted_direct(solver: GroupSolver, cols: NDArray, config: PenaltyConfig) -> tuple[NDArray, float]:
    """Closed-form restricted fit for square loss without lasso shrinkage."""
    X = solver.X
    y = solver.y
    XS = X[:, cols]
    if solver.fit_intercept:
        XS = np.column_stack([np.ones(X.shape[0]), XS])
    lam2 = config.lambda2
    if lam2 > 0:
        D = np.full(XS.shape[1], 2.0 * lam2)
        if solver.fit_intercept:
            D[0] = 0.0
        coef = np.linalg.solve(XS.T @ XS + np.diag(D), XS.T @ y)
    else:
        coef = np.linalg.lstsq(XS, y, rcond=None)[0]
    if solver.fit_intercept:
        return coef[1:], float(coef[0])
    return coef, 0.0


def _restricted_cd(solver: GroupSolver, subset, cols: NDArray, config: PenaltyConfig,
                   tol: float) -> tuple[NDArray, float]:
    """Restricted convex fit via coordinate descent with the subset penalty off."""
    groups, start = [], 0
    for k in subset:
        size = solver.blocks[k].shape[1]
        groups.append(list(range(start, start + size)))
        start += size
    opts = SolverOptions(tol=tol, max_sweeps=200_000, screening=False)
    sub = GroupSolver(solver.X[:, cols], solver.y, groups, solver.task,
                      fit_intercept=solver.fit_intercept, options=opts)
    idx = list(subset)
    sub_config = PenaltyConfig(0.0, config.lambda1, config.lambda2, config.shrink,
                               np.zeros(len(idx)), config.lambda1k[idx], config.lambda2k[idx],
                               config.mult0[idx], config.mult1[idx])
    state, _ = sub.fit(sub_config)
    return state.beta, state.intercept


def solve_exhaustive(solver: GroupSolver, config: PenaltyConfig, max_groups_active: int | None = None,
                     budget: int = 1_000_000, tol: float = 1e-10) -> OracleResult:
    """Enumerate every subset of at most ``max_groups_active`` groups.

    Subsets are visited by size, then lexicographically; a later subset
    replaces the incumbent only if it is lower by more than a relative
    1e-12, so ties go to the earlier subset.
    """
    g = solver.n_groups
    m = g if max_groups_active is None else min(max_groups_active, g)
    total = count_subsets(g, m)
    if total > budget:
        raise ValueError(f"exhaustive search needs {total} subsets, budget is {budget}")
    direct = solver.task == "square" and config.shrink != "lasso"
    p = solver.X.shape[1]
    best = None
    for size in range(m + 1):
        for subset in itertools.combinations(range(g), size):
            beta = np.zeros(p)
            if subset:
                cols = np.concatenate([np.arange(p)[solver.index[k]] for k in subset])
                if direct:
                    coef, b0 = _restricted_direct(solver, cols, config)
                else:
                    coef, b0 = _restricted_cd(solver, subset, cols, config, tol)
                beta[cols] = coef
            else:
                b0 = solver.null_intercept() if solver.fit_intercept else 0.0
            state = solver.init_state(config, beta, b0)
            obj = solver.objective(state, fresh=True)
            if best is None or obj < best[0] - TIE_TOL * max(1.0, abs(best[0])):
                best = (obj, subset, beta, b0)
    obj, subset, beta, b0 = best
    return OracleResult(tuple(subset), beta, float(b0), float(obj), total)


def optimality_gap(solver_objective: float, oracle_objective: float) -> float:
    return (solver_objective - oracle_objective) / oracle_objective
