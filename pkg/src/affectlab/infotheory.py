"""Parzen-window mutual information and conditional entropy between signals.

The density estimate is

    p_hat(z) = (1/N) sum_i delta(z - z_i, h)

with the Gaussian window

    delta(z, h) = exp(-z' Sigma^-1 z / (2 h^2)) / ((2 pi)^(d/2) h^d |Sigma|^(1/2))

where Sigma is the covariance of the samples (a scalar variance for the d=1
marginals, the full 2x2 covariance for the d=2 joint) and h is a dimensionless
width; with Silverman's choice h = 1.06 N^(-1/5) the effective bandwidth per
dimension is the familiar 1.06 sigma N^(-1/5).

Mutual information is evaluated on a regular grid (default 64 points per axis
spanning mean +- 3 sigma): the three densities are evaluated at the grid
nodes, renormalised to sum to one, and combined as

    I(X;Y) = sum p_hat(x,y) log( p_hat(x,y) / (p_hat(x) p_hat(y)) )

in nats, clamped at >= 0.  H(Y|X) = H(Y) - I(X;Y) with H(Y) taken from the
same grid marginal.

Implementation note: after standardising, samples are accumulated at their
nearest grid node and the density at the nodes is obtained by convolving the
counts with the kernel sampled on the node-offset lattice.  That is the same
grid sum reorganised around the identical kernel values (the nearest-node
snap moves each sample by at most half a grid step, far below the kernel
bandwidth) and it keeps the 496-pair feature extraction tractable.  The full
covariance in the joint kernel matters: it is what drives H(Y|X) -> 0 when a
channel is duplicated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .validation import SpecError, as_signal

GRID_SIGMA_SPAN = 3.0
_CROP_EPS = 1e-30
_RHO_CLAMP = 1.0 - 1e-12


@dataclass(frozen=True)
class MutualInfoConfig:
    window: str = "gaussian"
    h: float | None = None       # Silverman when None
    eval_grid: int = 64

    def __post_init__(self):
        if self.window != "gaussian":
            raise SpecError(f"unsupported window {self.window!r}")
        if self.h is not None and not self.h > 0:
            raise SpecError("bandwidth h must be positive")
        if self.eval_grid < 32:
            raise SpecError("eval_grid must be >= 32")


DEFAULT_MI_CONFIG = MutualInfoConfig()


def _standardize(x, name):
    mu = np.mean(x)
    sigma = np.std(x)
    if sigma == 0.0:
        raise SpecError(f"constant signal: {name} has zero variance")
    return (x - mu) / sigma


def _bin_indices(z, grid_pts, step):
    idx = np.rint((z + GRID_SIGMA_SPAN) / step).astype(np.intp)
    return np.clip(idx, 0, grid_pts - 1)


def _crop_centered(kernel, eps=_CROP_EPS):
    """Crop a (2G-1)x(2G-1) kernel to the symmetric box holding its support."""
    center = kernel.shape[0] // 2
    rows = np.flatnonzero(kernel.max(axis=1) > eps)
    cols = np.flatnonzero(kernel.max(axis=0) > eps)
    half = max(abs(rows - center).max(), abs(cols - center).max())
    sl = slice(center - half, center + half + 1)
    return kernel[sl, sl]


def _grid_densities(x, y, cfg):
    """Renormalised grid densities (joint, marginal x, marginal y)."""
    n = x.size
    g = cfg.eval_grid
    h = cfg.h if cfg.h is not None else 1.06 * n ** (-0.2)
    step = 2.0 * GRID_SIGMA_SPAN / (g - 1)

    xs = _standardize(x, "x")
    ys = _standardize(y, "y")
    rho = float(np.clip(np.mean(xs * ys), -_RHO_CLAMP, _RHO_CLAMP))

    ix = _bin_indices(xs, g, step)
    iy = _bin_indices(ys, g, step)
    hist2 = np.bincount(ix * g + iy, minlength=g * g).reshape(g, g).astype(np.float64)
    hist_x = hist2.sum(axis=1)
    hist_y = hist2.sum(axis=0)

    offsets = np.arange(-(g - 1), g) * step
    k1 = np.exp(-(offsets ** 2) / (2.0 * h ** 2))

    # Inverse of h^2 * [[1, rho], [rho, 1]] gives the quadratic form.
    denom = h ** 2 * (1.0 - rho ** 2)
    qa = 1.0 / denom
    qb = -rho / denom
    u = offsets[:, None]
    v = offsets[None, :]
    k2 = np.exp(-0.5 * (qa * u ** 2 + 2.0 * qb * u * v + qa * v ** 2))
    k2 = _crop_centered(k2)

    joint = sps.convolve(hist2, k2, mode="same")
    px = sps.convolve(hist_x, k1, mode="same")
    py = sps.convolve(hist_y, k1, mode="same")

    joint = np.maximum(joint, 0.0)
    joint /= joint.sum()
    px /= px.sum()
    py /= py.sum()
    return joint, px, py


def _mi_from_grids(joint, px, py):
    outer = px[:, None] * py[None, :]
    mask = joint > 0
    i = float(np.sum(joint[mask] * np.log(joint[mask] / outer[mask])))
    return max(i, 0.0)


def _validate_pair(x, y):
    x = as_signal(x, "x", min_len=64)
    y = as_signal(y, "y", min_len=64)
    if x.size != y.size:
        raise SpecError(f"length mismatch: {x.size} vs {y.size}")
    return x, y


def mutual_information(x, y, cfg=DEFAULT_MI_CONFIG):
    """I(X;Y) in nats, >= 0."""
    x, y = _validate_pair(x, y)
    joint, px, py = _grid_densities(x, y, cfg)
    return _mi_from_grids(joint, px, py)


def marginal_entropy(y, cfg=DEFAULT_MI_CONFIG):
    """H(Y) in nats from the grid marginal (discrete, grid-resolution)."""
    y = as_signal(y, "y", min_len=64)
    g = cfg.eval_grid
    h = cfg.h if cfg.h is not None else 1.06 * y.size ** (-0.2)
    step = 2.0 * GRID_SIGMA_SPAN / (g - 1)
    ys = _standardize(y, "y")
    hist = np.bincount(_bin_indices(ys, g, step), minlength=g).astype(np.float64)
    offsets = np.arange(-(g - 1), g) * step
    k1 = np.exp(-(offsets ** 2) / (2.0 * h ** 2))
    py = sps.convolve(hist, k1, mode="same")
    py /= py.sum()
    nz = py > 0
    return float(-np.sum(py[nz] * np.log(py[nz])))


def conditional_entropy(x, y, cfg=DEFAULT_MI_CONFIG):
    """H(Y|X) = H(Y) - I(X;Y), both from the same grid densities."""
    x, y = _validate_pair(x, y)
    joint, px, py = _grid_densities(x, y, cfg)
    i = _mi_from_grids(joint, px, py)
    nz = py > 0
    h_y = float(-np.sum(py[nz] * np.log(py[nz])))
    return h_y - i
