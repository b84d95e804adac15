"""Synthetic data for benchmarking: a grouped linear model and a sparse
additive model with linear and trigonometric components."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.special import expit
from scipy.stats import norm

DESIGNS = ("grouped", "semiparametric")


@dataclass
class SyntheticDesign:
    """Recipe for one synthetic dataset.

    ``kind="grouped"``: ``p`` Gaussian predictors in ``p // group_size``
    equal groups, standardized to mean zero and unit norm; the first
    ``n_true_groups`` groups carry coefficients of one.

    ``kind="semiparametric"``: ``p`` uniform predictors on [-1, 1] with a
    Gaussian copula; ``n_linear`` of them enter as x, ``n_cos`` as
    cos(pi x) and ``n_sin`` as sin(pi x), each component scaled to mean
    zero and unit variance.
    """

    kind: str = "grouped"
    n: int = 100
    p: int = 50
    seed: int = 0
    rho: float = 0.0
    correlation: str = "constant"
    snr: float = 10.0
    task: str = "square"
    group_size: int = 5
    n_true_groups: int = 2
    n_linear: int = 6
    n_cos: int = 2
    n_sin: int = 2

    def __post_init__(self):
        if self.kind not in DESIGNS:
            raise ValueError(f"unknown design {self.kind!r}; expected one of {DESIGNS}")
        if self.correlation not in ("constant", "toeplitz"):
            raise ValueError(f"unknown correlation {self.correlation!r}")
        if self.task not in ("square", "logistic"):
            raise ValueError(f"unknown task {self.task!r}")
        if not -1.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (-1, 1)")
        if self.n < 2 or self.p < 1:
            raise ValueError("need n >= 2 and p >= 1")
        if self.snr <= 0:
            raise ValueError("snr must be positive")
        if self.kind == "grouped":
            if self.p % self.group_size:
                raise ValueError("p must be a multiple of group_size")
            if self.n_true_groups > self.p // self.group_size:
                raise ValueError("more true groups than groups")
        elif self.n_linear + self.n_cos + self.n_sin > self.p:
            raise ValueError("more true functions than predictors")


@dataclass
class SyntheticData:
    X: NDArray
    y: NDArray
    groups: list[list[int]]
    f0: NDArray
    truth: dict


def correlation_matrix(p: int, rho: float, kind: str) -> NDArray:
    if kind == "constant":
        S = np.full((p, p), rho)
        np.fill_diagonal(S, 1.0)
        return S
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def _gaussian(rng, n: int, S: NDArray) -> NDArray:
    L = np.linalg.cholesky(S)
    return rng.standard_normal((n, S.shape[0])) @ L.T


def _response(rng, f0: NDArray, design: SyntheticDesign) -> tuple[NDArray, float]:
    if design.task == "logistic":
        return (rng.random(f0.shape[0]) < expit(f0)).astype(float), 0.0
    sigma = float(np.sqrt(np.var(f0) / design.snr))
    return f0 + sigma * rng.standard_normal(f0.shape[0]), sigma


def generate_synthetic(design: SyntheticDesign) -> SyntheticData:
    rng = np.random.default_rng(design.seed)
    S = correlation_matrix(design.p, design.rho, design.correlation)
    Z = _gaussian(rng, design.n, S)
    if design.kind == "grouped":
        return _grouped(rng, Z, design)
    return _semiparametric(rng, Z, design)


def _grouped(rng, Z, design):
    X = Z - Z.mean(axis=0)
    X /= np.linalg.norm(X, axis=0)
    k = design.group_size
    groups = [list(range(s, s + k)) for s in range(0, design.p, k)]
    beta = np.zeros(design.p)
    beta[: design.n_true_groups * k] = 1.0
    f0 = X @ beta
    y, sigma = _response(rng, f0, design)
    truth = {
        "design": asdict(design),
        "beta": beta.tolist(),
        "true_groups": list(range(design.n_true_groups)),
        "sigma": sigma,
        "f0": f0.tolist(),
    }
    return SyntheticData(X, y, groups, f0, truth)


def _semiparametric(rng, Z, design):
    U = norm.cdf(Z)
    lo, hi = U.min(axis=0), U.max(axis=0)
    X = 2.0 * (U - lo) / (hi - lo) - 1.0
    n_true = design.n_linear + design.n_cos + design.n_sin
    chosen = rng.choice(design.p, size=n_true, replace=False)
    kinds = ["linear"] * design.n_linear + ["cos"] * design.n_cos + ["sin"] * design.n_sin
    f0 = np.zeros(design.n)
    labels = ["zero"] * design.p
    functions = {}
    for j, kind in zip(chosen, kinds):
        x = X[:, j]
        f = {"linear": x, "cos": np.cos(np.pi * x), "sin": np.sin(np.pi * x)}[kind]
        f = (f - f.mean()) / f.std()
        f0 += f
        labels[j] = "linear" if kind == "linear" else "nonlinear"
        functions[int(j)] = kind
    y, sigma = _response(rng, f0, design)
    truth = {
        "design": asdict(design),
        "labels": labels,
        "functions": {str(j): v for j, v in sorted(functions.items())},
        "sigma": sigma,
        "f0": f0.tolist(),
    }
    return SyntheticData(X, y, [[j] for j in range(design.p)], f0, truth)
