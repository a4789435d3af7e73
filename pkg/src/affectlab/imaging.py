"""Raster helpers: bilinear resize, colormap lookup, PNG round-trip.

Resizing is implemented here (half-pixel-center convention, float64
arithmetic, round-half-up quantisation) rather than delegated to an image
library so that golden-image tests do not depend on resampling internals of
a third-party dependency.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np
from PIL import Image

from .validation import SpecError, check_rgb_image

EMBED_SIZE = 224


def _axis_coords(n_dst, n_src):
    # half-pixel centers: dst pixel i samples src at (i + .5) * scale - .5
    scale = n_src / n_dst
    x = (np.arange(n_dst) + 0.5) * scale - 0.5
    x = np.clip(x, 0.0, n_src - 1.0)
    lo = np.floor(x).astype(np.intp)
    hi = np.minimum(lo + 1, n_src - 1)
    frac = x - lo
    return lo, hi, frac


def resize_bilinear(img, height, width):
    """Bilinear resize of a float [H x W] or [H x W x C] array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        return resize_bilinear(arr[:, :, None], height, width)[:, :, 0]
    if arr.ndim != 3:
        raise SpecError(f"expected 2-D or 3-D array, got shape {arr.shape}")
    ry_lo, ry_hi, fy = _axis_coords(height, arr.shape[0])
    rx_lo, rx_hi, fx = _axis_coords(width, arr.shape[1])
    top = arr[ry_lo][:, rx_lo] * (1 - fx)[None, :, None] + arr[ry_lo][:, rx_hi] * fx[None, :, None]
    bot = arr[ry_hi][:, rx_lo] * (1 - fx)[None, :, None] + arr[ry_hi][:, rx_hi] * fx[None, :, None]
    return top * (1 - fy)[:, None, None] + bot * fy[:, None, None]


def to_uint8(img):
    """Quantise [0,1] floats to 8-bit with round-half-up."""
    arr = np.asarray(img, dtype=np.float64)
    return np.floor(np.clip(arr, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def resize_rgb(img, size=EMBED_SIZE):
    """Resize an 8-bit RGB image to size x size (bilinear)."""
    arr = check_rgb_image(img)
    if arr.shape[0] == size and arr.shape[1] == size:
        return arr.copy()
    return to_uint8(resize_bilinear(arr.astype(np.float64) / 255.0, size, size))


_parula_cache = None


def parula_table():
    """The shipped 64-entry colormap table, rows of RGB in [0,1]."""
    global _parula_cache
    if _parula_cache is None:
        with resources.files("affectlab.resources").joinpath("parula64.json").open() as f:
            _parula_cache = np.asarray(json.load(f), dtype=np.float64)
        if _parula_cache.shape != (64, 3):
            raise SpecError("parula64.json must hold 64 RGB triplets")
    return _parula_cache


def apply_parula(values):
    """Map a [0,1] float array to RGB via linear interpolation in the table."""
    table = parula_table()
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    pos = v * (table.shape[0] - 1)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, table.shape[0] - 1)
    frac = (pos - lo)[..., None]
    return table[lo] * (1 - frac) + table[hi] * frac


def grayscale(img_float):
    """Luma of a [H x W x 3] float image (Rec. 601 weights)."""
    arr = np.asarray(img_float, dtype=np.float64)
    return arr[:, :, 0] * 0.299 + arr[:, :, 1] * 0.587 + arr[:, :, 2] * 0.114


def write_png(path, img):
    img = check_rgb_image(img)
    Image.fromarray(img, mode="RGB").save(path, format="PNG")


def read_png(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)
