"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


class SpecError(ValueError):
    """Raised when an input violates a documented contract."""


def as_signal(x, name="signal", min_len=1):
    """Coerce ``x`` to a 1-D float64 array and check it is finite.

    Raises :class:`SpecError` on NaN/inf values or if fewer than ``min_len``
    samples are present.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise SpecError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size < min_len:
        raise SpecError(f"{name} needs at least {min_len} samples, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise SpecError(f"{name} contains non-finite values")
    return arr


def as_matrix(x, name="X", dtype=np.float64):
    """Coerce to a finite 2-D array."""
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim != 2:
        raise SpecError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SpecError(f"{name} contains non-finite values")
    return arr


def check_fs(fs):
    if not np.isfinite(fs) or fs <= 0:
        raise SpecError(f"sampling rate must be positive, got {fs}")
    return float(fs)


def check_rgb_image(img, size=None, name="image"):
    """Validate an 8-bit H x W x 3 raster, returning it as uint8."""
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise SpecError(f"{name} must be H x W x 3, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise SpecError(f"{name} must be uint8, got {arr.dtype}")
    if size is not None and arr.shape[:2] != tuple(size):
        raise SpecError(f"{name} must be {size[0]} x {size[1]}, got {arr.shape[:2]}")
    return arr


def check_constant(x, name="signal"):
    """Raise if the array has zero variance."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.size == 0 or np.ptp(arr) == 0.0:
        raise SpecError(f"constant signal: {name} has no variation")
    return arr
