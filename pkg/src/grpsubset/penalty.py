"""Group subset penalty with optional group lasso / ridge shrinkage, and its
closed-form group thresholding operator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

SHRINK_KINDS = ("none", "lasso", "ridge")


@dataclass(frozen=True)
class PenaltyConfig:
    """Global penalty levels together with the per-group values they induce.

    Per-group values follow ``lambda0k = m0k * lambda0``,
    ``lambda1k = m1k * lambda1`` and ``lambda2k = lambda2``, where by default
    ``m0k = p_k`` and ``m1k = sqrt(p_k)``.  Group weights multiply both
    ``m0k`` and ``m1k``.
    """

    lambda0: float
    lambda1: float
    lambda2: float
    shrink: str
    lambda0k: NDArray
    lambda1k: NDArray
    lambda2k: NDArray
    mult0: NDArray
    mult1: NDArray

    @classmethod
    def build(cls, lambda0: float, lambda1: float = 0.0, lambda2: float = 0.0,
              shrink: str = "none", group_sizes=None, weights=None) -> "PenaltyConfig":
        if shrink not in SHRINK_KINDS:
            raise ValueError(f"unknown shrinkage {shrink!r}; expected one of {SHRINK_KINDS}")
        if min(lambda0, lambda1, lambda2) < 0:
            raise ValueError("penalty parameters must be nonnegative")
        if shrink != "lasso":
            lambda1 = 0.0
        if shrink != "ridge":
            lambda2 = 0.0
        sizes = np.asarray(group_sizes, dtype=float)
        w = np.ones_like(sizes) if weights is None else np.asarray(weights, dtype=float)
        mult0 = sizes * w
        mult1 = np.sqrt(sizes) * w
        return cls(
            lambda0=float(lambda0),
            lambda1=float(lambda1),
            lambda2=float(lambda2),
            shrink=shrink,
            lambda0k=mult0 * lambda0,
            lambda1k=mult1 * lambda1,
            lambda2k=np.full(sizes.shape, float(lambda2)),
            mult0=mult0,
            mult1=mult1,
        )

    def with_lambda0(self, lambda0: float) -> "PenaltyConfig":
        if lambda0 < 0:
            raise ValueError("penalty parameters must be nonnegative")
        return PenaltyConfig(float(lambda0), self.lambda1, self.lambda2, self.shrink,
                             self.mult0 * lambda0, self.lambda1k, self.lambda2k,
                             self.mult0, self.mult1)

    def with_lambda1(self, lambda1: float) -> "PenaltyConfig":
        return PenaltyConfig(self.lambda0, float(lambda1), self.lambda2, self.shrink,
                             self.lambda0k, self.mult1 * lambda1, self.lambda2k,
                             self.mult0, self.mult1)

    @property
    def n_groups(self) -> int:
        return self.lambda0k.shape[0]

    def as_dict(self) -> dict:
        return {"lambda0": self.lambda0, "lambda1": self.lambda1,
                "lambda2": self.lambda2, "shrink": self.shrink}


def omega(config: PenaltyConfig, beta: NDArray, groups) -> float:
    """Regularizer value for coefficients partitioned by disjoint groups.

    ``groups`` holds one entry per group: a ``slice`` or an index sequence.
    A group counts as active only when its coefficients are exactly nonzero.
    """
    total = 0.0
    for k, g in enumerate(groups):
        bk = beta[g] if isinstance(g, slice) else beta[list(g)]
        sq = float(bk @ bk)
        if sq != 0.0:
            total += config.lambda0k[k] + config.lambda1k[k] * math.sqrt(sq) + config.lambda2k[k] * sq
    return total


def threshold(beta_hat: NDArray, c: float, lambda0: float, lambda1: float, lambda2: float) -> NDArray:
    """Minimize ``c/2 ||b - beta_hat||^2 + lambda0 1(b != 0) + lambda1 ||b|| + lambda2 ||b||^2``.

    Ties at the selection cutoff resolve to the nonzero branch.
    """
    if not c > 0:
        raise ValueError(f"threshold needs c > 0, got {c}")
    beta_hat = np.asarray(beta_hat, dtype=float)
    phi = threshold_scale(math.sqrt(float(beta_hat @ beta_hat)), c, lambda0, lambda1, lambda2)
    if phi == 0.0:
        return np.zeros_like(beta_hat)
    return phi * beta_hat


def threshold_scale(norm: float, c: float, lambda0: float, lambda1: float, lambda2: float) -> float:
    """Scalar multiplier ``phi`` (or 0) that :func:`threshold` applies."""
    if norm == 0.0:
        return 0.0
    denom = c + 2.0 * lambda2
    phi = (c / denom) * max(1.0 - lambda1 / (c * norm), 0.0)
    if phi > 0.0 and phi * norm >= math.sqrt(2.0 * lambda0 / denom):
        return phi
    return 0.0


def threshold_scales(norm: NDArray, c: NDArray, lambda0: NDArray, lambda1: NDArray,
                     lambda2: NDArray) -> NDArray:
    """Elementwise :func:`threshold_scale` over groups."""
    norm = np.asarray(norm, dtype=float)
    denom = c + 2.0 * lambda2
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = (c / denom) * np.maximum(1.0 - lambda1 / (c * norm), 0.0)
        keep = (norm != 0.0) & (phi > 0.0) & (phi * norm >= np.sqrt(2.0 * lambda0 / denom))
    return np.where(keep, phi, 0.0)


def surrogate_objective(b: NDArray, beta_hat: NDArray, c: float,
                        lambda0: float, lambda1: float, lambda2: float) -> float:
    d = np.asarray(b) - beta_hat
    sq = float(np.asarray(b) @ np.asarray(b))
    pen = 0.0 if sq == 0.0 else lambda0 + lambda1 * math.sqrt(sq) + lambda2 * sq
    return 0.5 * c * float(d @ d) + pen
