"""Input validation helpers used at every public boundary."""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, LabelError


def as_coords(x, name: str = "coords") -> np.ndarray:
    """Coerce to a read-only (n, 3) float64 array of finite point coordinates."""
    arr = np.array(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise DimensionError(f"{name} must have shape (n, 3), got {arr.shape}")
    if arr.shape[0] < 1:
        raise DimensionError(f"{name} must contain at least one point")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


def as_labels(y, n: int, num_classes: int | None = None, name: str = "labels") -> np.ndarray:
    """Coerce to a read-only (n,) integer label array, optionally range-checked."""
    arr = np.array(y)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise DimensionError(f"{name} must have shape ({n},), got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise LabelError(f"{name} must be integers")
        arr = arr.astype(np.int64)
    else:
        arr = arr.astype(np.int64)
    if arr.min(initial=0) < 0:
        raise LabelError(f"{name} contains negative indices")
    if num_classes is not None and arr.size and int(arr.max()) >= num_classes:
        raise LabelError(
            f"{name} contains index {int(arr.max())} but only {num_classes} classes exist"
        )
    arr.setflags(write=False)
    return arr


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array of finite values."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_same_rows(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"{what}: row counts differ, {a.shape[0]} vs {b.shape[0]}")
