"""Input validation helpers used across the package."""

import numbers

import numpy as np

from .exceptions import ArgumentError, ShapeError


def check_tensor3(X, name="X", allow_nan=False, copy=False):
    """Return ``X`` as a finite float64 array with exactly three axes.

    Parameters
    ----------
    X : array-like
        Candidate tensor. Two-dimensional input is rejected rather than
        silently promoted, since an ``n1 x n2`` matrix and an
        ``n1 x n2 x 1`` tensor mean different things to callers.
    name : str
        Used in error messages.
    allow_nan : bool
        Permit NaN entries (used to mark missing values for imputation).
    copy : bool
        Force a copy even when ``X`` is already a float64 array.
    """
    arr = np.array(X, dtype=np.float64, copy=True) if copy else np.asarray(X, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeError(f"{name} must be a third-order tensor, got ndim={arr.ndim}")
    if min(arr.shape) < 1:
        raise ShapeError(f"{name} has an empty dimension: {arr.shape}")
    if allow_nan:
        if np.isinf(arr).any():
            raise ArgumentError(f"{name} contains infinite entries")
    elif not np.isfinite(arr).all():
        raise ArgumentError(f"{name} contains NaN or infinite entries")
    return arr


def check_same_shape(X, Y, names=("X", "Y")):
    if X.shape != Y.shape:
        raise ShapeError(f"{names[0]} has shape {X.shape} but {names[1]} has shape {Y.shape}")


def check_rank(r, shape, lower=0, name="rank"):
    """Validate a tubal rank against ``min(n1, n2)`` of ``shape``."""
    if not isinstance(r, numbers.Integral) or isinstance(r, bool):
        raise ArgumentError(f"{name} must be an integer, got {r!r}")
    upper = min(shape[0], shape[1])
    if not lower <= r <= upper:
        raise ArgumentError(f"{name}={r} outside [{lower}, {upper}] for shape {tuple(shape)}")
    return int(r)


def check_dims(dims):
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 1:
        raise ShapeError(f"dims must be three positive integers, got {dims}")
    return dims
