"""Input checks shared by the estimators."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array


def check_fraction(value, name: str, low: float = 0.0, high: float = 1.0,
                   low_open: bool = False, high_open: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    bad_low = value <= low if low_open else value < low
    bad_high = value >= high if high_open else value > high
    if bad_low or bad_high or not np.isfinite(value):
        lo = "(" if low_open else "["
        hi = ")" if high_open else "]"
        raise ValueError(f"{name} must lie in {lo}{low}, {high}{hi}, got {value}")
    return value


def check_unit_rows(E, n_rows: int | None = None, atol: float = 1e-6) -> np.ndarray:
    E = np.asarray(E, dtype=float)
    if E.size == 0:
        return E.reshape(0, 0)
    E = check_array(E, dtype=float)
    if n_rows is not None and E.shape[0] != n_rows:
        raise ValueError(f"expected {n_rows} embedding rows, got {E.shape[0]}")
    norms = np.linalg.norm(E, axis=1)
    if not np.allclose(norms, 1.0, atol=atol):
        raise ValueError("embeddings must be unit-normalized")
    return E


def check_binary_design(X) -> np.ndarray:
    X = check_array(X, dtype=float)
    if not np.isin(X, (0.0, 1.0)).all():
        raise ValueError("mask design matrix must contain only 0/1 entries")
    return X
