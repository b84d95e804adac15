"""Square and logistic loss: values, working residuals, group gradients and
group-wise Lipschitz constants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.special import expit

LOSSES = ("square", "logistic")


def _check_kind(kind: str) -> None:
    if kind not in LOSSES:
        raise ValueError(f"unknown loss {kind!r}; expected one of {LOSSES}")


def loss_from_linear_predictor(kind: str, y: NDArray, eta: NDArray) -> float:
    if kind == "square":
        r = y - eta
        return 0.5 * float(r @ r)
    # log(1 + e^eta) - y*eta, evaluated without overflow
    return float(np.sum(np.logaddexp(0.0, eta) - y * eta))


def loss_value(kind: str, X: NDArray, y: NDArray, beta: NDArray, intercept: float = 0.0) -> float:
    """Total loss sum_i l(x_i^T beta + intercept, y_i)."""
    _check_kind(kind)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if X.shape[0] != y.shape[0] or X.shape[1] != beta.shape[0]:
        raise ValueError(f"dimension mismatch: X {X.shape}, y {y.shape}, beta {beta.shape}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y)) and np.all(np.isfinite(beta))
            and np.isfinite(intercept)):
        raise ValueError("loss_value requires finite inputs")
    return loss_from_linear_predictor(kind, y, X @ beta + intercept)


def residual_from_linear_predictor(kind: str, y: NDArray, eta: NDArray) -> NDArray:
    if kind == "square":
        return y - eta
    return y - expit(eta)


def group_gradient(kind: str, Xk: NDArray, residual: NDArray) -> NDArray:
    """Gradient of the loss with respect to one coefficient group.

    Both losses share the form -X_k^T r; ``kind`` only determines how the
    residual was formed and is accepted for symmetry with the other calls.
    """
    _check_kind(kind)
    return -(np.asarray(Xk).T @ residual)


def lipschitz_constant(kind: str, Xk: NDArray) -> float:
    """Largest eigenvalue of X_k^T X_k, divided by 4 for logistic loss."""
    _check_kind(kind)
    Xk = np.asarray(Xk, dtype=float)
    if Xk.ndim == 1:
        Xk = Xk[:, None]
    if Xk.shape[1] == 1:
        smax2 = float(Xk[:, 0] @ Xk[:, 0])
    else:
        smax2 = float(np.linalg.norm(Xk, 2)) ** 2
    if smax2 <= 0.0:
        raise ValueError("Lipschitz constant undefined for a zero group matrix")
    return smax2 if kind == "square" else smax2 / 4.0


@dataclass
class WorkingResidual:
    """Residual vector kept in step with the coefficients.

    ``eta`` is the linear predictor (including any intercept); ``r`` is
    y - eta for square loss and y - sigmoid(eta) for logistic loss.
    """

    kind: str
    y: NDArray
    eta: NDArray
    r: NDArray
    updates_since_refresh: int = 0

    @classmethod
    def from_linear_predictor(cls, kind: str, y: NDArray, eta: NDArray) -> "WorkingResidual":
        eta = np.array(eta, dtype=float)
        return cls(kind, y, eta, residual_from_linear_predictor(kind, y, eta))

    def loss(self) -> float:
        if self.kind == "square":
            return 0.5 * float(self.r @ self.r)
        return loss_from_linear_predictor(self.kind, self.y, self.eta)


def update_residual(res: WorkingResidual, Xk: NDArray, delta: NDArray) -> None:
    """Apply a change ``delta`` in group coefficients to the residual in place."""
    step = Xk @ delta
    res.eta += step
    if res.kind == "square":
        res.r -= step
    else:
        res.r = res.y - expit(res.eta)
    res.updates_since_refresh += 1


def shift_intercept(res: WorkingResidual, delta: float) -> None:
    res.eta += delta
    if res.kind == "square":
        res.r -= delta
    else:
        res.r = res.y - expit(res.eta)
