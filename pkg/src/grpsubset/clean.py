"""Outlier screening for tabular series.

An entry is an outlier when its distance from the series median exceeds
six interquartile ranges.  Outliers are set missing and every missing
entry is filled by linear interpolation over the row index, carrying the
nearest observed value past either end.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

OUTLIER_RATIO = 6.0


@dataclass
class CleanReport:
    changes: list[tuple[int, int, float, float, str]] = field(default_factory=list)
    skipped: list[int] = field(default_factory=list)

    def as_rows(self) -> list[list]:
        return [[r, c, old, new, why] for r, c, old, new, why in self.changes]


def flag_outliers(series, ratio: float = OUTLIER_RATIO) -> NDArray | None:
    """Boolean mask of outliers, or None when the IQR is zero.

    Quartiles use linear interpolation between order statistics and ignore
    missing entries.
    """
    x = np.asarray(series, dtype=float)
    obs = x[~np.isnan(x)]
    if obs.size == 0:
        return np.zeros(x.shape, dtype=bool)
    q1, q2, q3 = np.percentile(obs, [25, 50, 75])
    iqr = q3 - q1
    if iqr == 0.0:
        return None
    with np.errstate(invalid="ignore"):
        return np.abs(x - q2) / iqr > ratio


def interpolate_missing(series) -> NDArray:
    x = np.asarray(series, dtype=float).copy()
    miss = np.isnan(x)
    if not miss.any():
        return x
    if miss.all():
        raise ValueError("cannot impute a series with no observed values")
    idx = np.arange(x.size)
    x[miss] = np.interp(idx[miss], idx[~miss], x[~miss])
    return x


def clean_matrix(X, ratio: float = OUTLIER_RATIO) -> tuple[NDArray, CleanReport]:
    """Screen every column of ``X`` and impute outliers and missing cells.

    Columns with zero IQR skip the outlier rule (with a warning) but still
    have their missing cells imputed.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("clean_matrix expects a 2-D array")
    out = X.copy()
    report = CleanReport()
    for j in range(X.shape[1]):
        col = X[:, j].copy()
        missing = np.isnan(col)
        mask = flag_outliers(col, ratio)
        if mask is None:
            warnings.warn(f"column {j} has zero interquartile range; outlier rule skipped", stacklevel=2)
            report.skipped.append(j)
            mask = np.zeros(col.shape, dtype=bool)
        col[mask] = np.nan
        try:
            filled = interpolate_missing(col)
        except ValueError as exc:
            raise ValueError(f"column {j}: {exc}") from None
        for i in np.flatnonzero(mask | missing):
            report.changes.append((int(i), j, float(X[i, j]), float(filled[i]),
                                   "outlier" if mask[i] else "missing"))
        out[:, j] = filled
    report.changes.sort()
    return out, report
