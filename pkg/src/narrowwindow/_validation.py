"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import GeometryError
from .geometry import Geometry


def check_geometries(X) -> list[Geometry]:
    """Coerce ``X`` into a list of :class:`Geometry`.

    Accepts a single geometry, a sequence of geometries, or an array-like of
    shape ``(n_samples, 3)`` with columns ``d1, d2, a``.
    """
    if isinstance(X, Geometry):
        return [X]
    if isinstance(X, (list, tuple)) and X and all(isinstance(g, Geometry) for g in X):
        return list(X)
    try:
        arr = check_array(X, ensure_2d=True, dtype=np.float64)
    except ValueError as exc:
        raise GeometryError(str(exc)) from None
    if arr.shape[1] != 3:
        raise GeometryError(f"expected columns (d1, d2, a), got shape {arr.shape}")
    return [Geometry(*map(float, row)) for row in arr]


def check_positive(name: str, value, *, integer: bool = False, upper=None):
    kind = numbers.Integral if integer else numbers.Real
    if not isinstance(value, kind) or isinstance(value, bool):
        raise GeometryError(f"{name} must be {'an integer' if integer else 'a real number'}")
    if not value > 0:
        raise GeometryError(f"{name} must be positive, got {value}")
    if upper is not None and not value < upper:
        raise GeometryError(f"{name} must be smaller than {upper}, got {value}")
    return value


def check_increasing(name: str, values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise GeometryError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise GeometryError(f"{name} must be finite")
    if np.any(np.diff(arr) <= 0):
        raise GeometryError(f"{name} must be strictly increasing")
    return arr
