"""Input validation helpers, in the spirit of ``sklearn.utils.check_array``."""

import numpy as np

from .exceptions import TooFewPointsError


def check_points(points, min_points=1, name="points"):
    """Return ``points`` as a finite float array of shape (n, 2).

    Raises ``TooFewPointsError`` when fewer than ``min_points`` rows are given
    and ``ValueError`` for bad shapes or non-finite values.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1 and arr.shape[0] == 2 and min_points <= 1:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (n, 2), got {arr.shape}")
    if arr.shape[0] < min_points:
        raise TooFewPointsError(
            f"{name} needs at least {min_points} points, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite coordinates")
    return arr


def check_point(p, name="point"):
    arr = np.asarray(p, dtype=float)
    if arr.shape != (2,):
        raise ValueError(f"{name} must have shape (2,), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return value


def check_weights(weights, tol=1e-9):
    """Validate a fusion weight pair (w_ego, w_coop) summing to one."""
    w_ego, w_coop = (float(w) for w in weights)
    if w_ego < 0 or w_coop < 0:
        raise ValueError("fusion weights must be non-negative")
    if abs(w_ego + w_coop - 1.0) > tol:
        raise ValueError(f"fusion weights must sum to 1, got {w_ego + w_coop}")
    return w_ego, w_coop
