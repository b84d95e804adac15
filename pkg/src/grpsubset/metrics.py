"""Prediction losses and recovery metrics for fitted models."""

from __future__ import annotations

from collections import Counter

import numpy as np

FUNCTION_LABELS = ("zero", "linear", "nonlinear")


def mean_square_error(y, y_hat) -> float:
    y, y_hat = np.asarray(y, dtype=float), np.asarray(y_hat, dtype=float)
    return float(np.mean((y - y_hat) ** 2))


def mean_logistic_loss(y, eta) -> float:
    """Average negative log-likelihood of labels ``y`` under logits ``eta``."""
    y, eta = np.asarray(y, dtype=float), np.asarray(eta, dtype=float)
    return float(np.mean(np.logaddexp(0.0, eta) - y * eta))


def prediction_loss(task: str, y, eta) -> float:
    """MSE for regression, mean logistic loss for classification; ``eta``
    is the linear predictor."""
    if task == "square":
        return mean_square_error(y, eta)
    return mean_logistic_loss(y, eta)


def relative_estimation_error(f0, f_hat) -> float:
    f0, f_hat = np.asarray(f0, dtype=float), np.asarray(f_hat, dtype=float)
    denom = float(f0 @ f0)
    if denom == 0.0:
        raise ValueError("relative estimation error undefined for a zero true function")
    d = f0 - f_hat
    return float(d @ d) / denom


def f1_score(true_labels, pred_labels) -> float:
    """Micro F1 over the nonzero function classes.

    Each predictor whose predicted class is linear or nonlinear counts as a
    true positive when it matches the truth and a false positive otherwise;
    each truly nonzero predictor not predicted as its own class adds a
    false negative.
    """
    tp = fp = fn = 0
    for t, p in zip(true_labels, pred_labels):
        if p != "zero":
            if p == t:
                tp += 1
            else:
                fp += 1
        if t != "zero" and p != t:
            fn += 1
    denom = 2 * tp + fp + fn
    return 1.0 if denom == 0 else 2 * tp / denom


def function_counts(labels) -> dict[str, int]:
    c = Counter(labels)
    return {"total": c["linear"] + c["nonlinear"], "linear": c["linear"], "nonlinear": c["nonlinear"]}


def evaluate_metrics(f_hat, f0, pred_labels=None, true_labels=None) -> dict:
    out = {"relative_estimation_error": relative_estimation_error(f0, f_hat)}
    if pred_labels is not None:
        out["nonzero_function_counts"] = function_counts(pred_labels)
        if true_labels is not None:
            out["f1_score"] = f1_score(true_labels, pred_labels)
    return out
