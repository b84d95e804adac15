"""Compiled inner loop for coordinate descent over contiguous groups.

Mirrors :meth:`GroupSolver.group_update` and the thresholding rule in
:func:`penalty.threshold_scale` operation for operation.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _scale(norm, c, l0, l1, l2):
    if norm == 0.0:
        return 0.0
    denom = c + 2.0 * l2
    phi = (c / denom) * max(1.0 - l1 / (c * norm), 0.0)
    if phi > 0.0 and phi * norm >= math.sqrt(2.0 * l0 / denom):
        return phi
    return 0.0


@njit(cache=True)
def _expit(t):
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


@njit(cache=True)
def sweep_contiguous(X, starts, ends, order, beta, eta, r, y, logistic,
                     cbar, c, l0, l1, l2, gsq):
    """One pass of thresholded gradient steps over ``order``.

    Updates ``beta``, ``eta``, ``r`` and the squared group norms ``gsq`` in
    place and returns the largest relative movement, whether the support
    changed, the descent bound and the number of residual updates.
    """
    n = X.shape[0]
    max_move = 0.0
    changed = False
    bound = 0.0
    updates = 0
    z = np.empty(X.shape[1])
    d = np.empty(X.shape[1])
    step = np.empty(n)
    for k in order:
        s = starts[k]
        m = ends[k] - s
        cb = cbar[k]
        zsq = 0.0
        old_sq = 0.0
        for a in range(m):
            col = s + a
            g = 0.0
            for i in range(n):
                g += X[i, col] * r[i]
            z[a] = beta[col] + g / cb
            zsq += z[a] * z[a]
            old_sq += beta[col] * beta[col]
        norm = math.sqrt(zsq)
        phi = _scale(norm, cb, l0[k], l1[k], l2[k])
        if phi == 0.0 and old_sq == 0.0:
            continue
        dsq = 0.0
        new_sq = 0.0
        for a in range(m):
            col = s + a
            new = phi * z[a]
            d[a] = new - beta[col]
            beta[col] = new
            dsq += d[a] * d[a]
            new_sq += new * new
        gsq[k] = new_sq
        for i in range(n):
            step[i] = 0.0
        for a in range(m):
            if d[a] != 0.0:
                col = s + a
                da = d[a]
                for i in range(n):
                    step[i] += X[i, col] * da
        for i in range(n):
            eta[i] += step[i]
        if logistic:
            for i in range(n):
                r[i] = y[i] - _expit(eta[i])
        else:
            for i in range(n):
                r[i] -= step[i]
        updates += 1
        if dsq > 0.0:
            move = math.sqrt(dsq)
            new_norm = phi * norm
            max_move = max(max_move, move / (1.0 + new_norm))
            bound += 0.5 * (cb - c[k]) * dsq
            if (old_sq != 0.0) != (new_norm != 0.0):
                changed = True
    return max_move, changed, bound, updates
