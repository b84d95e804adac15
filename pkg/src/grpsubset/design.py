"""Grouped design matrices: validation, standardization, overlap expansion
and per-group orthogonalization."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

TASKS = ("square", "logistic")


@dataclass(frozen=True)
class GroupedProblem:
    """Design matrix, response and (possibly overlapping) column groups.

    ``weights`` are per-group penalty multipliers applied on top of the
    default group-size scalings; all ones unless a front-end (for instance
    the semiparametric one) needs to tilt penalization between groups.
    """

    X: NDArray
    y: NDArray
    groups: tuple[tuple[int, ...], ...]
    task: str = "square"
    weights: NDArray | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise ValueError(f"X must be 2-dimensional, got shape {X.shape}")
        n, p = X.shape
        if y.shape[0] != n:
            raise ValueError(f"X has {n} rows but y has {y.shape[0]} entries")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise ValueError("X and y must be finite")
        if self.task == "logistic" and not np.all((y == 0) | (y == 1)):
            raise ValueError("logistic task requires y in {0, 1}")

        groups = tuple(tuple(int(j) for j in g) for g in self.groups)
        if not groups:
            raise ValueError("at least one group is required")
        covered = np.zeros(p, dtype=bool)
        for k, g in enumerate(groups):
            if not g:
                raise ValueError(f"group {k} is empty")
            if len(set(g)) != len(g):
                raise ValueError(f"group {k} contains duplicate indices")
            if min(g) < 0 or max(g) >= p:
                raise ValueError(f"group {k} has indices outside 0..{p - 1}")
            covered[list(g)] = True
        if not covered.all():
            missing = np.flatnonzero(~covered)
            raise ValueError(f"columns {missing.tolist()} belong to no group")

        if self.weights is None:
            weights = np.ones(len(groups))
        else:
            weights = np.asarray(self.weights, dtype=float).ravel()
            if weights.shape[0] != len(groups) or np.any(weights < 0):
                raise ValueError("weights must be nonnegative, one per group")

        X.setflags(write=False)
        y.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def group_sizes(self) -> NDArray:
        return np.array([len(g) for g in self.groups])

    def is_disjoint(self) -> bool:
        return sum(len(g) for g in self.groups) == len({j for g in self.groups for j in g})

    def subset_rows(self, rows) -> "GroupedProblem":
        return GroupedProblem(self.X[rows], self.y[rows], self.groups, self.task, self.weights)


@dataclass(frozen=True)
class Standardization:
    """Column centres and l2 scales used to standardize X (and centre y)."""

    x_mean: NDArray
    x_scale: NDArray
    y_mean: float

    def coefficients(self, beta_std: NDArray) -> NDArray:
        return np.asarray(beta_std) / self.x_scale

    def intercept(self, beta_std: NDArray, intercept_std: float = 0.0) -> float:
        beta = self.coefficients(beta_std)
        return float(self.y_mean + intercept_std - self.x_mean @ beta)

    def transform(self, X: NDArray) -> NDArray:
        return (np.asarray(X, dtype=float) - self.x_mean) / self.x_scale


def standardize(problem: GroupedProblem) -> tuple[GroupedProblem, Standardization]:
    """Centre every column of X and scale it to unit l2-norm.

    For square loss y is centred too, so the intercept is absorbed; for
    logistic loss y is left as is and the solver carries an explicit
    intercept.
    """
    X = problem.X
    n = X.shape[0]
    if n < 2:
        raise ValueError("standardization needs at least 2 observations")
    mean = X.mean(axis=0)
    Xc = X - mean
    scale = np.sqrt(np.einsum("ij,ij->j", Xc, Xc))
    # A column is constant when its spread is at rounding level of its size.
    tiny = 1e-12 * np.maximum(1.0, np.abs(mean)) * np.sqrt(n)
    bad = np.flatnonzero(scale <= tiny)
    if bad.size:
        raise ValueError(f"constant column {bad[0]}")
    Xs = Xc / scale
    if problem.task == "square":
        y_mean = float(problem.y.mean())
        y = problem.y - y_mean
    else:
        y_mean = 0.0
        y = problem.y
    record = Standardization(mean, scale, y_mean)
    return GroupedProblem(Xs, y, problem.groups, problem.task, problem.weights), record


@dataclass(frozen=True)
class ExpandedProblem:
    """Disjoint-group representation of a grouped problem.

    Columns of X are replicated once per group membership and concatenated
    in group order; ``groups`` are then contiguous ranges.  Coefficients on
    the expanded columns are the per-group latent vectors.
    """

    Xt: NDArray
    y: NDArray
    groups: tuple[tuple[int, ...], ...]
    back_map: NDArray | None
    task: str = "square"
    group_sizes: NDArray = field(default=None)
    weights: NDArray = field(default=None)
    p_original: int = 0

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def bounds(self) -> list[tuple[int, int]]:
        return [(g[0], g[-1] + 1) for g in self.groups]


def expand_overlap(problem: GroupedProblem) -> ExpandedProblem:
    cols = np.concatenate([np.asarray(g, dtype=int) for g in problem.groups])
    Xt = np.asfortranarray(problem.X[:, cols])
    new_groups = []
    start = 0
    for g in problem.groups:
        new_groups.append(tuple(range(start, start + len(g))))
        start += len(g)
    Xt.setflags(write=False)
    cols.setflags(write=False)
    return ExpandedProblem(
        Xt=Xt,
        y=problem.y,
        groups=tuple(new_groups),
        back_map=cols,
        task=problem.task,
        group_sizes=problem.group_sizes,
        weights=problem.weights,
        p_original=problem.p,
    )


def collapse_coefficients(expanded: ExpandedProblem, nu: NDArray) -> NDArray:
    """Sum latent coefficients over replicated columns."""
    nu = np.asarray(nu, dtype=float)
    if expanded.back_map is None:
        raise ValueError("expanded problem has no column map; invert the orthogonalization first")
    if nu.shape != expanded.back_map.shape:
        raise ValueError(f"expected {expanded.back_map.shape[0]} latent coefficients, got {nu.shape[0]}")
    return np.bincount(expanded.back_map, weights=nu, minlength=expanded.p_original)


@dataclass(frozen=True)
class OrthoTransform:
    """Per-group basis changes R_k with Q_k = X_k R_k orthonormal.

    Full-rank groups use the symmetric form R = V S^-1 V^T so that an
    already orthonormal block is left untouched; rank-deficient groups keep
    only their r_k leading directions.
    """

    bases: tuple[NDArray, ...]
    source_groups: tuple[tuple[int, ...], ...]
    p_source: int

    def to_source(self, theta: NDArray, groups: Sequence[Sequence[int]]) -> NDArray:
        """Map coefficients on orthogonalized groups back to the source columns."""
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(self.p_source)
        for R, g_new, g_src in zip(self.bases, groups, self.source_groups):
            out[list(g_src)] = R @ theta[list(g_new)]
        return out


def orthogonalize(expanded: ExpandedProblem, rtol: float | None = None
                  ) -> tuple[ExpandedProblem, OrthoTransform]:
    Xt = expanded.Xt
    n = Xt.shape[0]
    blocks, bases, new_groups = [], [], []
    start = 0
    for k, (a, b) in enumerate(expanded.bounds):
        Xk = Xt[:, a:b]
        U, s, Vt = np.linalg.svd(Xk, full_matrices=False)
        if s.size == 0 or s[0] <= 1e-12:
            raise ValueError(f"group {k} has a numerically zero design block")
        tol = rtol if rtol is not None else max(Xk.shape) * np.finfo(float).eps
        r = int(np.sum(s > tol * s[0]))
        if r == Xk.shape[1]:
            R = (Vt.T / s) @ Vt
            Q = U @ Vt
        else:
            R = Vt[:r].T / s[:r]
            Q = U[:, :r]
        blocks.append(Q)
        bases.append(R)
        new_groups.append(tuple(range(start, start + r)))
        start += r
    Q = np.asfortranarray(np.hstack(blocks)) if blocks else np.zeros((n, 0))
    Q.setflags(write=False)
    ortho = ExpandedProblem(
        Xt=Q,
        y=expanded.y,
        groups=tuple(new_groups),
        back_map=None,
        task=expanded.task,
        group_sizes=expanded.group_sizes,
        weights=expanded.weights,
        p_original=expanded.p_original,
    )
    transform = OrthoTransform(tuple(bases), expanded.groups, Xt.shape[1])
    return ortho, transform
