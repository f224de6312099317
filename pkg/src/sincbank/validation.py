"""Input validation helpers used by the public entry points."""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError


def as_float_array(x, name="array"):
    """Coerce to a float64 ndarray, rejecting non-numeric input."""
    try:
        arr = np.asarray(x, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidParameterError(f"{name} is not numeric: {exc}") from None
    return arr


def check_finite(x, name="array"):
    arr = as_float_array(x, name)
    if arr.size and not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} contains non-finite values")
    return arr


def check_signal(x, name="signal", min_len=1):
    """Validate a finite 1-D signal and return it as float64."""
    arr = check_finite(x, name)
    if arr.ndim != 1:
        raise InvalidParameterError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.shape[0] < min_len:
        raise InvalidParameterError(
            f"{name} has {arr.shape[0]} samples, needs at least {min_len}"
        )
    return arr


def check_odd_kernel(kernel_len, name="kernel_len"):
    if not isinstance(kernel_len, (int, np.integer)):
        raise InvalidParameterError(f"{name} must be an integer, got {kernel_len!r}")
    L = int(kernel_len)
    if L < 3 or L % 2 == 0:
        raise InvalidParameterError(f"{name} must be odd and >= 3, got {L}")
    return L


def check_positive_int(value, name):
    if not isinstance(value, (int, np.integer)) or int(value) < 1:
        raise InvalidParameterError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_positive_float(value, name):
    v = float(value)
    if not np.isfinite(v) or v <= 0:
        raise InvalidParameterError(f"{name} must be a positive finite number, got {value!r}")
    return v


def check_signal_batch(X, name="X"):
    """Accept one 1-D signal or a batch (2-D array / sequence of 1-D signals).

    Returns (list_of_signals, was_single).
    """
    if isinstance(X, np.ndarray) and X.ndim == 2:
        return [check_signal(row, f"{name}[{i}]") for i, row in enumerate(X)], False
    if isinstance(X, (list, tuple)):
        return [check_signal(sig, f"{name}[{i}]") for i, sig in enumerate(X)], False
    return [check_signal(X, name)], True
