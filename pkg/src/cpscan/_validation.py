"""Input validation helpers used by the estimators and functional API."""

import numbers

import numpy as np

from .exceptions import ConfigurationError, ShapeError


def check_matrix(a, name="X", allow_1d=True):
    """Return ``a`` as a finite 2-D float64 array.

    A 1-D input is read as a single column when ``allow_1d`` is true.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1 and allow_1d:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} contains non-finite values")
    return arr


def check_paired(X, Y):
    X = check_matrix(X, "X")
    Y = check_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise ShapeError(
            f"X and Y row counts differ: {X.shape[0]} != {Y.shape[0]}"
        )
    return X, Y


def check_int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigurationError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_nonneg(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value < 0:
        raise ConfigurationError(f"{name} must be a finite real >= 0, got {value!r}")
    return float(value)


def check_change_points(cps, n_rows):
    """Validate a sorted list of change points strictly inside (0, n_rows)."""
    out = [int(c) for c in cps]
    for a, b in zip(out, out[1:]):
        if b <= a:
            raise ConfigurationError("change points must be strictly increasing")
    if out and (out[0] <= 0 or out[-1] >= n_rows):
        raise ConfigurationError(
            f"change points must lie in (0, {n_rows}), got {out}"
        )
    return out
