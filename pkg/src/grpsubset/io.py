"""Plain-text file formats: headerless CSV matrices, group lists and
sorted-key JSON."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

MISSING = {"", "na", "nan", "null"}


class InputError(ValueError):
    """Malformed input file; the message names the file and line."""


def _where(path, line: int | None = None) -> str:
    return f"{path}:{line}" if line is not None else str(path)


def read_matrix(path, allow_missing: bool = False) -> NDArray:
    """Headerless numeric CSV as a 2-D float array.

    Empty fields and NA/NaN read as missing (NaN) when ``allow_missing``,
    otherwise they are an error.
    """
    rows = []
    width = None
    try:
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                vals = []
                for col, field in enumerate(row, start=1):
                    text = field.strip()
                    if text.lower() in MISSING:
                        if not allow_missing:
                            raise InputError(f"{_where(path, lineno)}: missing value in column {col}")
                        vals.append(math.nan)
                        continue
                    try:
                        v = float(text)
                    except ValueError:
                        raise InputError(f"{_where(path, lineno)}: cannot parse {text!r} in column {col}") from None
                    if not math.isfinite(v):
                        raise InputError(f"{_where(path, lineno)}: non-finite value in column {col}")
                    vals.append(v)
                if width is None:
                    width = len(vals)
                elif len(vals) != width:
                    raise InputError(f"{_where(path, lineno)}: expected {width} fields, found {len(vals)}")
                rows.append(vals)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def read_vector(path) -> NDArray:
    """A single-column CSV (one value per line) as a 1-D array."""
    M = read_matrix(path)
    if M.shape[1] != 1:
        raise InputError(f"{path}:1: expected one value per line, found {M.shape[1]}")
    return M[:, 0]


def read_groups(path) -> list[list[int]]:
    """One group per line, zero-based column indices separated by
    whitespace or commas; blank lines and ``#`` comments are skipped."""
    groups = []
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.split("#", 1)[0].replace(",", " ").strip()
                if not text:
                    continue
                try:
                    g = [int(tok) for tok in text.split()]
                except ValueError:
                    raise InputError(f"{_where(path, lineno)}: group indices must be integers") from None
                if min(g) < 0:
                    raise InputError(f"{_where(path, lineno)}: negative column index")
                groups.append(g)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    if not groups:
        raise InputError(f"{path}: no groups")
    return groups


def check_groups(groups, p: int, path) -> None:
    """Name the offending line of a groups file whose indices exceed ``p``."""
    for lineno, g in enumerate(groups, start=1):
        if max(g) >= p:
            raise InputError(f"{path}: group {lineno} refers to column {max(g)} but X has {p} columns")


def _fmt(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def write_matrix(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in M:
            w.writerow([_fmt(v) for v in row])


def write_vector(path, v) -> None:
    write_matrix(path, np.asarray(v, dtype=float).reshape(-1, 1))


def write_groups(path, groups) -> None:
    with open(path, "w") as fh:
        for g in groups:
            fh.write(" ".join(str(int(j)) for j in g) + "\n")


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_default, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
