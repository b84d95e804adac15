"""Sparse semiparametric regression via overlapping spline groups.

Every raw predictor x_j is expanded into a small cubic spline basis whose
first column is x_j itself.  Two overlapping groups are formed per
predictor: a linear group holding only that first column and a nonlinear
group holding the whole basis.  Penalizing the linear group by alpha and
the nonlinear one by 1 - alpha (alpha <= 0.5) lets the fit choose between
a zero, linear or nonlinear component for every predictor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .design import GroupedProblem
from .path import CvResult, PathSpec, cross_validate, make_folds

DEFAULT_ALPHAS = (0.25, 0.30, 0.35, 0.40, 0.45, 0.50)


class SplineExpansion:
    """Cubic thin-plate style basis {x, |x - t1|^3, ..., |x - tK|^3}.

    Raw predictors are min-max scaled to [-1, 1] and knots sit at the
    equispaced interior quantiles i / (K + 1).  The cubic columns are
    centred and projected off the centred linear column, so the first
    column of each block is exactly the scaled predictor and the remaining
    columns only carry curvature.  All of this is learned by :meth:`fit`
    and replayed unchanged by :meth:`transform`.
    """

    _FITTED = ("lo", "hi", "knots", "x_mean", "c_mean", "gamma")

    def __init__(self, n_knots: int = 3, basis_size: int | None = None):
        if n_knots < 1:
            raise ValueError("need at least one knot")
        d = n_knots + 1 if basis_size is None else int(basis_size)
        if d != n_knots + 1:
            raise ValueError(f"basis size {d} does not match {n_knots} knots (expected {n_knots + 1})")
        self.n_knots = n_knots
        self.basis_size = d
        self.lo: NDArray | None = None
        self.hi: NDArray | None = None
        self.knots: NDArray | None = None
        self.x_mean: NDArray | None = None
        self.c_mean: NDArray | None = None
        self.gamma: NDArray | None = None

    @property
    def n_predictors(self) -> int:
        if self.lo is None:
            raise RuntimeError("expansion is not fitted")
        return self.lo.shape[0]

    def _scale(self, X: NDArray) -> NDArray:
        return 2.0 * (X - self.lo) / (self.hi - self.lo) - 1.0

    def _cubics(self, x: NDArray, t: NDArray) -> NDArray:
        return np.abs(x[:, None] - t[None, :]) ** 3

    def fit(self, X_raw) -> "SplineExpansion":
        X = np.asarray(X_raw, dtype=float)
        if X.ndim != 2:
            raise ValueError("raw predictors must be a 2-dimensional array")
        need = self.n_knots + 2
        for j in range(X.shape[1]):
            m = np.unique(X[:, j]).size
            if m < need:
                raise ValueError(f"predictor {j} has {m} distinct values; the spline basis needs at least {need}")
        self.lo, self.hi = X.min(axis=0), X.max(axis=0)
        Z = self._scale(X)
        q = np.arange(1, self.n_knots + 1) / (self.n_knots + 1)
        self.knots = np.quantile(Z, q, axis=0).T
        d0, K = X.shape[1], self.n_knots
        self.x_mean = Z.mean(axis=0)
        self.c_mean = np.empty((d0, K))
        self.gamma = np.empty((d0, K))
        for j in range(d0):
            xc = Z[:, j] - self.x_mean[j]
            C = self._cubics(Z[:, j], self.knots[j])
            self.c_mean[j] = C.mean(axis=0)
            self.gamma[j] = (xc @ (C - self.c_mean[j])) / (xc @ xc)
        return self

    def transform(self, X_raw) -> NDArray:
        """Basis matrix with columns ``j * d + 0 .. j * d + d - 1`` for predictor j."""
        if self.lo is None:
            raise RuntimeError("expansion is not fitted")
        X = np.asarray(X_raw, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_predictors:
            raise ValueError(f"expected {self.n_predictors} raw predictors, got shape {X.shape}")
        Z = self._scale(X)
        d = self.basis_size
        B = np.empty((X.shape[0], X.shape[1] * d))
        for j in range(X.shape[1]):
            x = Z[:, j]
            C = self._cubics(x, self.knots[j]) - self.c_mean[j]
            C -= np.outer(x - self.x_mean[j], self.gamma[j])
            B[:, j * d] = x
            B[:, j * d + 1:(j + 1) * d] = C
        return B

    def fit_transform(self, X_raw) -> NDArray:
        return self.fit(X_raw).transform(X_raw)

    def as_dict(self) -> dict:
        if self.lo is None:
            raise RuntimeError("expansion is not fitted")
        out = {"n_knots": self.n_knots, "basis_size": self.basis_size}
        out.update({name: getattr(self, name).tolist() for name in self._FITTED})
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SplineExpansion":
        exp = cls(int(data["n_knots"]), int(data["basis_size"]))
        for name in cls._FITTED:
            setattr(exp, name, np.asarray(data[name], dtype=float))
        return exp


@dataclass(frozen=True)
class SemiparamGroups:
    """Overlapping linear / nonlinear groups over a spline basis.

    Group ``2j`` is the linear group of predictor j and group ``2j + 1``
    its nonlinear group.
    """

    n_predictors: int
    basis_size: int
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 0.5:
            raise ValueError(f"alpha must lie in (0, 0.5], got {self.alpha}")

    @property
    def groups(self) -> tuple[tuple[int, ...], ...]:
        d = self.basis_size
        out = []
        for j in range(self.n_predictors):
            out.append((j * d,))
            out.append(tuple(range(j * d, (j + 1) * d)))
        return tuple(out)

    @property
    def weights(self) -> NDArray:
        return np.tile([self.alpha, 1.0 - self.alpha], self.n_predictors)

    def problem(self, B: NDArray, y, task: str = "square") -> GroupedProblem:
        return GroupedProblem(B, y, self.groups, task, self.weights)


def build_spline_groups(X_raw, alpha: float = 0.5, n_knots: int = 3,
                        basis_size: int | None = None) -> tuple[NDArray, SemiparamGroups, SplineExpansion]:
    """Expand raw predictors and lay out their overlapping groups."""
    expansion = SplineExpansion(n_knots, basis_size)
    B = expansion.fit_transform(X_raw)
    return B, SemiparamGroups(expansion.n_predictors, expansion.basis_size, alpha), expansion


def classify_functions(active_groups, n_predictors: int) -> list[str]:
    """Per-predictor function type from latent group activity.

    Nonlinear whenever the nonlinear group is active, whether or not the
    linear group is; linear if only the linear group is; zero otherwise.
    """
    active = {int(k) for k in active_groups}
    labels = []
    for j in range(n_predictors):
        if 2 * j + 1 in active:
            labels.append("nonlinear")
        elif 2 * j in active:
            labels.append("linear")
        else:
            labels.append("zero")
    return labels


@dataclass
class SemiparamCvResult:
    alpha: float
    alphas: list[float]
    best_losses: list[float]
    cv: CvResult
    expansion: SplineExpansion
    layout: SemiparamGroups
    all_cv: list[CvResult] = field(default_factory=list)

    @property
    def labels(self) -> list[str]:
        return classify_functions(self.cv.selected_point.active_groups, self.layout.n_predictors)

    def decision_function(self, X_raw) -> NDArray:
        return self.cv.selected_point.model.decision_function(self.expansion.transform(X_raw))

    def as_dict(self) -> dict:
        return {
            **self.cv.as_dict(),
            "alpha": self.alpha,
            "alphas": list(self.alphas),
            "alpha_best_losses": list(self.best_losses),
            "function_types": self.labels,
            "spline": self.expansion.as_dict(),
        }


def _spline_design(X_raw, y, task, alpha, n_knots):
    def fn(train, val):
        exp = SplineExpansion(n_knots).fit(X_raw[train])
        layout = SemiparamGroups(exp.n_predictors, exp.basis_size, alpha)
        return layout.problem(exp.transform(X_raw[train]), y[train], task), exp.transform(X_raw[val])
    return fn


def alpha_grid_cv(X_raw, y, task: str = "square", alphas=DEFAULT_ALPHAS, spec: PathSpec | None = None,
                  n_folds: int = 5, seed: int = 0, n_knots: int = 3) -> SemiparamCvResult:
    """Cross-validate alpha jointly with the usual tuning grid.

    The spline expansion, including its scaling and knots, is refit on the
    training rows of every fold.  All alphas share one fold assignment;
    the alpha whose best grid point has the lowest mean loss wins, ties
    going to the first alpha listed.
    """
    X_raw = np.asarray(X_raw, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("alpha grid is empty")
    folds = make_folds(y, task, n_folds, seed)
    results, best = [], []
    for a in alphas:
        B, layout, expansion = build_spline_groups(X_raw, a, n_knots)
        problem = layout.problem(B, y, task)
        cv = cross_validate(problem, spec, n_folds, seed, fold_ids=folds,
                            design_fn=_spline_design(X_raw, y, task, a, n_knots))
        results.append((cv, layout, expansion))
        best.append(float(cv.mean_loss.min()))
    i = int(np.argmin(best))
    cv, layout, expansion = results[i]
    return SemiparamCvResult(alphas[i], alphas, best, cv, expansion, layout, [r[0] for r in results])
