"""Regularization paths with warm starts and K-fold cross-validation.

For each value of the secondary parameter (lambda1 or lambda2) the subset
penalty lambda0 starts at the smallest value giving the null model and
then decreases adaptively: every next value is chosen so that at least one
inactive group is guaranteed to enter, so consecutive solutions always
differ.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .design import GroupedProblem
from .local_search import LocalSearchOptions, fit_with_local_search
from .metrics import prediction_loss
from .penalty import PenaltyConfig
from .pipeline import FittedModel, PreparedProblem
from .solver import ConvergenceReport, GroupSolver, SolverOptions, SolverState

SCHEMA_PATH = "grpsubset.path/1"
SCHEMA_CV = "grpsubset.cv/1"

# The null-model cutoffs are suprema (ties enter the model), so the first
# grid point sits a hair above them.
_FIRST_POINT_MARGIN = 1.0 + 1e-9


@dataclass
class PathSpec:
    """Tuning grid layout.

    ``estimator="subset"`` runs an adaptive lambda0 path for every
    secondary value; ``estimator="grouplasso"`` fixes lambda0 = 0 and walks
    a log grid of lambda1 instead.  ``max_active`` ends a path at the
    first point with more active groups than that.
    """

    n_lambda0: int = 100
    alpha: float = 0.9
    shrink: str = "none"
    n_secondary: int = 10
    lambda1_min_ratio: float = 1e-4
    lambda2_max: float = 100.0
    lambda2_min: float = 1e-4
    secondary: list[float] | None = None
    lambda0_grid: list[float] | None = None
    estimator: str = "subset"
    n_lambda: int = 100
    local_search: bool = False
    orthogonalize: bool = False
    max_active: int | None = None
    solver: SolverOptions = field(default_factory=SolverOptions)
    local_search_options: LocalSearchOptions = field(default_factory=LocalSearchOptions)

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")
        if self.estimator not in ("subset", "grouplasso"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.estimator == "grouplasso" and self.shrink != "lasso":
            self.shrink = "lasso"
        if self.n_lambda0 < 1 or self.n_secondary < 1:
            raise ValueError("grid sizes must be positive")
        if self.max_active is not None and self.max_active < 1:
            raise ValueError("max_active must be positive")

    def as_dict(self) -> dict:
        return {
            "n_lambda0": self.n_lambda0, "alpha": self.alpha, "shrink": self.shrink,
            "n_secondary": self.n_secondary, "estimator": self.estimator,
            "n_lambda": self.n_lambda, "local_search": self.local_search,
            "orthogonalize": self.orthogonalize, "tol": self.solver.tol,
            "max_active": self.max_active,
        }


@dataclass
class PathPoint:
    config: PenaltyConfig
    theta: NDArray
    intercept: float
    objective: float
    model: FittedModel
    report: ConvergenceReport
    swaps: int = 0

    @property
    def active_groups(self) -> list[int]:
        return self.model.active_groups

    def as_dict(self) -> dict:
        return {
            **self.config.as_dict(),
            "objective": self.objective,
            "active_groups": self.active_groups,
            "n_active": len(self.active_groups),
            "intercept": self.model.intercept,
            "coef": self.model.coef.tolist(),
            "coefficients": {str(k): v.tolist() for k, v in sorted(self.model.latent.items())},
            "report": self.report.as_dict(),
            "swaps": self.swaps,
        }


@dataclass
class PathResult:
    task: str
    spec: PathSpec
    secondary_values: list[float]
    paths: list[list[PathPoint]]
    groups: tuple
    n_features: int
    provenance: dict

    def point(self, s: int, t: int) -> PathPoint:
        """Grid position ``(s, t)``; positions past a path's end map to its last point."""
        pts = self.paths[s]
        return pts[min(t, len(pts) - 1)]

    def as_dict(self) -> dict:
        return {
            "schema": SCHEMA_PATH,
            "task": self.task,
            "spec": self.spec.as_dict(),
            "n_features": self.n_features,
            "groups": [list(g) for g in self.groups],
            "provenance": self.provenance,
            "paths": [
                {"secondary": sv, "points": [pt.as_dict() for pt in pts]}
                for sv, pts in zip(self.secondary_values, self.paths)
            ],
        }


def data_hash(problem: GroupedProblem) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(problem.X).tobytes())
    h.update(np.ascontiguousarray(problem.y).tobytes())
    h.update(repr(problem.groups).encode())
    h.update(np.ascontiguousarray(problem.weights).tobytes())
    return h.hexdigest()


# --------------------------------------------------------------- lambda grids

def _entry_values(solver: GroupSolver, state: SolverState, config: PenaltyConfig,
                  cbar: NDArray | None = None) -> NDArray:
    """Per-group lambda0 below which an inactive group would enter:
    (||grad_k|| - lambda1k)_+^2 / (2 m0k (cbar_k + 2 lambda2k)); -inf for
    active groups."""
    cbar = solver.cbar if cbar is None else cbar
    grad = solver.gradient(state)
    gnorm = np.sqrt(solver.group_sq_norms(grad))
    excess = np.maximum(gnorm - config.lambda1k, 0.0) ** 2
    denom = 2.0 * config.mult0 * (cbar + 2.0 * config.lambda2k)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(denom > 0, excess / denom, np.where(excess > 0, np.inf, 0.0))
    active = solver.group_sq_norms(state.beta) != 0.0
    return np.where(active, -np.inf, vals)


def lambda0_max(solver: GroupSolver, state: SolverState, config: PenaltyConfig) -> float:
    """Largest per-group entry value at ``state``; with the null state this
    is the cutoff above which the fit is identically zero."""
    vals = _entry_values(solver, state, config)
    return float(np.max(vals)) if vals.size else -math.inf


def next_lambda0(solver: GroupSolver, state: SolverState, alpha: float) -> float | None:
    """Next subset penalty along a path, or None when no value of lambda0
    can change the current solution (every group active, or every inactive
    group blocked by shrinkage)."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    top = lambda0_max(solver, state, state.config)
    if not top > 0.0:
        return None
    return alpha * top


def lambda1_max(solver: GroupSolver, state: SolverState, config: PenaltyConfig) -> float:
    """Smallest lambda1 giving the all-zero fit: max_k ||grad_k(0)|| / m1k."""
    grad = solver.gradient(state)
    gnorm = np.sqrt(solver.group_sq_norms(grad))
    with np.errstate(divide="ignore"):
        vals = np.where(config.mult1 > 0, gnorm / config.mult1, 0.0)
    return float(np.max(vals))


def secondary_grid(prep: PreparedProblem, spec: PathSpec, null_state: SolverState) -> list[float]:
    if spec.secondary is not None:
        return sorted((float(v) for v in spec.secondary), reverse=True)
    if spec.shrink == "none":
        return [0.0]
    n = spec.n_lambda if spec.estimator == "grouplasso" else spec.n_secondary
    if spec.shrink == "lasso":
        top = lambda1_max(prep.solver, null_state, prep.penalty(shrink="lasso"))
        if top <= 0:
            return [0.0]
        top *= _FIRST_POINT_MARGIN
        return np.geomspace(top, top * spec.lambda1_min_ratio, n).tolist()
    return np.geomspace(spec.lambda2_max, spec.lambda2_min, n).tolist()


# ---------------------------------------------------------------------- paths

def _solve(prep: PreparedProblem, spec: PathSpec, config: PenaltyConfig, state: SolverState):
    if spec.local_search:
        state, ls = fit_with_local_search(prep.solver, config, state=state,
                                          options=spec.local_search_options)
        return state, ls.final, len(ls.swaps)
    state, report = prep.solver.fit(config, state=state)
    return state, report, 0


def _point(prep: PreparedProblem, state: SolverState, report, swaps: int) -> PathPoint:
    theta = state.beta.copy()
    return PathPoint(state.config, theta, state.intercept, state.objective,
                     prep.to_original(theta, state.intercept), report, swaps)


def _too_dense(spec: PathSpec, point: PathPoint) -> bool:
    return spec.max_active is not None and len(point.active_groups) > spec.max_active


def lambda0_path(prep: PreparedProblem, spec: PathSpec, lambda1: float = 0.0,
                 lambda2: float = 0.0) -> list[PathPoint]:
    """Warm-started lambda0 path at fixed shrinkage."""
    solver = prep.solver
    config = prep.penalty(0.0, lambda1, lambda2, spec.shrink)
    state = solver.init_state(config)
    points: list[PathPoint] = []
    if spec.lambda0_grid is not None:
        for lam in spec.lambda0_grid:
            state, report, swaps = _solve(prep, spec, config.with_lambda0(lam), state)
            points.append(_point(prep, state, report, swaps))
            if _too_dense(spec, points[-1]):
                break
        return points

    lam = lambda0_max(solver, state, config)
    lam = max(lam, 0.0) * _FIRST_POINT_MARGIN
    for _ in range(spec.n_lambda0):
        state, report, swaps = _solve(prep, spec, config.with_lambda0(lam), state)
        points.append(_point(prep, state, report, swaps))
        if _too_dense(spec, points[-1]):
            break
        nxt = next_lambda0(solver, state, spec.alpha)
        if nxt is None or nxt >= lam:
            break
        lam = nxt
    return points


def fit_path(problem: GroupedProblem, spec: PathSpec | None = None, seed: int | None = None,
             prepared: PreparedProblem | None = None, expand: bool = True) -> PathResult:
    """Fit the full tuning grid.

    Coefficients in the result are on the original columns: overlap
    collapsed, orthogonalization inverted and standardization undone.
    """
    spec = spec or PathSpec()
    prep = prepared or PreparedProblem(problem, spec.orthogonalize, expand=expand, options=spec.solver)
    null_state = prep.solver.init_state(prep.penalty(shrink=spec.shrink))
    secondaries = secondary_grid(prep, spec, null_state)
    paths = []
    for s, value in enumerate(secondaries):
        l1 = value if spec.shrink == "lasso" else 0.0
        l2 = value if spec.shrink == "ridge" else 0.0
        try:
            if spec.estimator == "grouplasso":
                paths.append(_group_lasso_point(prep, spec, l1, paths))
                if _too_dense(spec, paths[-1][0]):
                    break
            else:
                paths.append(lambda0_path(prep, spec, l1, l2))
        except Exception as exc:  # annotate with grid position
            raise RuntimeError(f"path failed at secondary index {s} (value {value!r}): {exc}") from exc
    if spec.estimator == "grouplasso":
        # One lambda1 path, one point per secondary value.
        paths = [[pts[0] for pts in paths]]
        secondaries = [0.0]
    provenance = {"seed": seed, "data_hash": data_hash(problem)}
    return PathResult(problem.task, spec, secondaries, paths, problem.groups, problem.p, provenance)


def _group_lasso_point(prep: PreparedProblem, spec: PathSpec, lambda1: float, previous) -> list[PathPoint]:
    config = prep.penalty(0.0, lambda1, 0.0, "lasso")
    if previous:
        last = previous[-1][0]
        state = prep.solver.init_state(config, last.theta, last.intercept)
    else:
        state = prep.solver.init_state(config)
    state, report, swaps = _solve(prep, spec, config, state)
    return [_point(prep, state, report, swaps)]


# ----------------------------------------------------------- cross-validation

@dataclass
class CvResult:
    mean_loss: NDArray
    se_loss: NDArray
    fold_ids: NDArray
    selected: tuple[int, int]
    selected_point: PathPoint
    full_path: PathResult
    secondary_values: list[float]
    extra: dict = field(default_factory=dict)

    @property
    def selected_config(self) -> dict:
        return self.selected_point.config.as_dict()

    def as_dict(self) -> dict:
        s, t = self.selected
        return {
            "schema": SCHEMA_CV,
            "task": self.full_path.task,
            "spec": self.full_path.spec.as_dict(),
            "n_features": self.full_path.n_features,
            "groups": [list(g) for g in self.full_path.groups],
            "provenance": self.full_path.provenance,
            "fold_ids": self.fold_ids.tolist(),
            "secondary_values": list(self.secondary_values),
            "mean_loss": self.mean_loss.tolist(),
            "se_loss": self.se_loss.tolist(),
            "selected": {"secondary_index": s, "lambda0_index": t},
            "model": self.selected_point.as_dict(),
            **self.extra,
        }


def make_folds(y, task: str, n_folds: int, seed: int = 0) -> NDArray:
    """Fold labels with sizes differing by at most one; stratified by class
    for logistic loss."""
    y = np.asarray(y)
    n = y.shape[0]
    if n_folds < 2 or n_folds > n:
        raise ValueError(f"need 2 <= folds <= n, got {n_folds} folds for {n} rows")
    rng = np.random.default_rng(seed)
    folds = np.empty(n, dtype=int)
    if task == "logistic":
        offset = 0
        for cls in (0.0, 1.0):
            idx = np.flatnonzero(y == cls)
            idx = idx[rng.permutation(idx.size)]
            folds[idx] = (offset + np.arange(idx.size)) % n_folds
            offset += idx.size
    else:
        perm = rng.permutation(n)
        folds[perm] = np.arange(n) % n_folds
    return folds


DesignFn = Callable[[NDArray, NDArray], tuple[GroupedProblem, NDArray]]


def _default_design(problem: GroupedProblem) -> DesignFn:
    def fn(train, val):
        return problem.subset_rows(train), problem.X[val]
    return fn


def cross_validate(problem: GroupedProblem, spec: PathSpec | None = None, n_folds: int = 5,
                   seed: int = 0, metric: Callable | None = None,
                   design_fn: DesignFn | None = None, fold_ids: NDArray | None = None) -> CvResult:
    """K-fold cross-validation over the tuning grid.

    Each fold refits its own (data-adaptive) grid; losses are aggregated by
    grid position.  ``design_fn(train_rows, val_rows)`` may rebuild the
    training problem and validation design per fold, e.g. to refit a
    feature expansion on training rows only.
    """
    spec = spec or PathSpec()
    metric = metric or (lambda y, eta: prediction_loss(problem.task, y, eta))
    design_fn = design_fn or _default_design(problem)
    folds = make_folds(problem.y, problem.task, n_folds, seed) if fold_ids is None else np.asarray(fold_ids)
    n_folds = int(folds.max()) + 1

    fold_losses = []
    for f in range(n_folds):
        train = np.flatnonzero(folds != f)
        val = np.flatnonzero(folds == f)
        train_problem, X_val = design_fn(train, val)
        if problem.task == "logistic" and np.unique(train_problem.y).size < 2:
            raise ValueError(f"fold {f} training rows contain a single class; use stratified folds")
        path = fit_path(train_problem, spec)
        y_val = problem.y[val]
        fold_losses.append([[metric(y_val, pt.model.decision_function(X_val)) for pt in pts]
                            for pts in path.paths])

    full = fit_path(problem, spec, seed=seed)
    n_sec = len(full.paths)
    n_pos = max(max(len(row) for row in fl) for fl in fold_losses)
    n_pos = max(n_pos, max(len(p) for p in full.paths))
    grid = np.empty((n_folds, n_sec, n_pos))
    for f, fl in enumerate(fold_losses):
        if len(fl) != n_sec:
            raise RuntimeError("folds produced different secondary grid sizes")
        for s, row in enumerate(fl):
            padded = row + [row[-1]] * (n_pos - len(row))
            grid[f, s] = padded
    mean = grid.mean(axis=0)
    se = grid.std(axis=0, ddof=1) / math.sqrt(n_folds) if n_folds > 1 else np.zeros_like(mean)
    s, t = np.unravel_index(int(np.argmin(mean)), mean.shape)
    s, t = int(s), int(t)
    return CvResult(mean, se, folds, (s, t), full.point(s, t), full, full.secondary_values)
