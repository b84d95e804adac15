import math

import numpy as np
import pytest

from grpsubset.losses import (
    WorkingResidual,
    group_gradient,
    lipschitz_constant,
    loss_value,
    residual_from_linear_predictor,
    update_residual,
)


def test_loss_values():
    X = np.eye(2)
    assert loss_value("square", X, [1.0, 2.0], [1.0, 2.0]) == 0.0
    assert loss_value("square", X, [1.0, 0.0], [0.0, 0.0]) == 0.5
    y = np.array([0.0, 1.0, 1.0])
    assert math.isclose(loss_value("logistic", np.ones((3, 1)), y, [0.0]), 3 * math.log(2), rel_tol=1e-15)


def test_loss_value_errors():
    with pytest.raises(ValueError, match="dimension"):
        loss_value("square", np.ones((2, 2)), [1.0, 2.0], [1.0])
    with pytest.raises(ValueError, match="finite"):
        loss_value("square", np.ones((1, 1)), [1.0], [np.inf])
    with pytest.raises(ValueError, match="unknown loss"):
        loss_value("hinge", np.ones((1, 1)), [1.0], [1.0])


def test_logistic_loss_no_overflow():
    X = np.array([[1.0], [1.0]])
    val = loss_value("logistic", X, [1.0, 0.0], [800.0])
    assert math.isclose(val, 800.0, rel_tol=1e-12)


def test_gradient_of_zero_residual():
    np.testing.assert_array_equal(group_gradient("square", np.ones((3, 2)), np.zeros(3)), np.zeros(2))


def _fd_grad(kind, X, y, beta, cols, h=1e-6):
    g = np.empty(len(cols))
    for i, j in enumerate(cols):
        e = np.zeros_like(beta)
        e[j] = h
        g[i] = (loss_value(kind, X, y, beta + e) - loss_value(kind, X, y, beta - e)) / (2 * h)
    return g


@pytest.mark.parametrize("kind, tol", [("square", 1e-6), ("logistic", 1e-5)])
def test_gradient_matches_finite_differences(kind, tol):
    rng = np.random.default_rng(7)
    X = rng.standard_normal((20, 3))
    y = (rng.random(20) < 0.5).astype(float) if kind == "logistic" else rng.standard_normal(20)
    beta = rng.standard_normal(3) * 0.5
    r = residual_from_linear_predictor(kind, y, X @ beta)
    grad = group_gradient(kind, X, r)
    fd = _fd_grad(kind, X, y, beta, range(3))
    assert np.max(np.abs(grad - fd)) / (1 + np.max(np.abs(grad))) < tol
    assert np.max(np.abs(grad - fd) / np.abs(grad)) < tol


def test_lipschitz_constants(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((10, 3)))
    assert math.isclose(lipschitz_constant("square", Q), 1.0, rel_tol=1e-12)
    assert math.isclose(lipschitz_constant("logistic", Q), 0.25, rel_tol=1e-12)
    x = rng.standard_normal(10)
    x /= np.linalg.norm(x)
    assert math.isclose(lipschitz_constant("square", x[:, None]), 1.0, rel_tol=1e-12)
    with pytest.raises(ValueError):
        lipschitz_constant("square", np.zeros((3, 1)))


@pytest.mark.parametrize("kind", ["square", "logistic"])
def test_block_descent_inequality(kind, rng):
    n, p = 30, 6
    X = rng.standard_normal((n, p))
    y = (rng.random(n) < 0.5).astype(float) if kind == "logistic" else rng.standard_normal(n)
    k = slice(2, 6)
    ck = lipschitz_constant(kind, X[:, k])
    for _ in range(100):
        b = rng.standard_normal(p)
        bt = b.copy()
        bt[k] += rng.standard_normal(4) * rng.uniform(0.01, 3)
        r = residual_from_linear_predictor(kind, y, X @ b)
        gk = group_gradient(kind, X[:, k], r)
        d = bt[k] - b[k]
        rhs = loss_value(kind, X, y, b) + gk @ d + 0.5 * ck * d @ d
        assert loss_value(kind, X, y, bt) <= rhs + 1e-10 * max(1.0, abs(rhs))


def test_incremental_residual_square(rng):
    n, p = 25, 8
    X = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    beta = np.zeros(p)
    res = WorkingResidual.from_linear_predictor("square", y, X @ beta)
    before = res.r.copy()
    update_residual(res, X[:, :2], np.zeros(2))
    np.testing.assert_array_equal(res.r, before)
    for _ in range(10_000):
        k = int(rng.integers(0, 4))
        delta = rng.standard_normal(2) * 0.1
        beta[2 * k: 2 * k + 2] += delta
        update_residual(res, X[:, 2 * k: 2 * k + 2], delta)
    np.testing.assert_allclose(res.r, y - X @ beta, atol=1e-10)


def test_logistic_residual_range(rng):
    X = rng.standard_normal((15, 2))
    y = (rng.random(15) < 0.5).astype(float)
    res = WorkingResidual.from_linear_predictor("logistic", y, np.zeros(15))
    for _ in range(50):
        update_residual(res, X, rng.standard_normal(2))
        assert np.all(np.abs(res.r) < 1)
    np.testing.assert_allclose(res.r, residual_from_linear_predictor("logistic", y, res.eta), atol=1e-15)
