"""EEG feature families: band PSD vectors, pairwise conditional-entropy
features, and topographic RGB maps with embedding-derived features.

Feature counts per montage: 3 bands x C channels (96 / 42), C(C-1)/2
conditional-entropy pairs (496 / 91), and 30 post-PCA deep features from the
trial's composed topo image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CloughTocher2DInterpolator, NearestNDInterpolator

from .data import FeatureBlock, TrialRecording
from .dsp import DEFAULT_HOP_S, DEFAULT_WIN_S, EEG_BANDS, welch_band_power
from .imaging import resize_rgb, to_uint8
from .infotheory import DEFAULT_MI_CONFIG, conditional_entropy
from .layouts import ScalpLayout
from .validation import SpecError

TOPO_GRID = 64


@dataclass(frozen=True)
class TopoImage:
    grid: np.ndarray    # [H x W] floats in [0,1]; 0 outside mask
    mask: np.ndarray    # [H x W] bools, True inside the head disc


def _require_eeg(trial: TrialRecording):
    if trial.modality != "EEG":
        raise SpecError(f"expected an EEG recording, got {trial.modality}")


def band_psd_features(trial, layout: ScalpLayout | None = None,
                      bands=EEG_BANDS, win_s=DEFAULT_WIN_S, hop_s=DEFAULT_HOP_S):
    """Per-channel band power averaged over the trial, band-major order."""
    _require_eeg(trial)
    if layout is not None:
        layout.positions(trial.channels)
    names, values = [], []
    for band in bands:
        for ch_name, ch in zip(trial.channels, trial.samples):
            names.append(f"psd_{band.name}_{ch_name}")
            values.append(welch_band_power(ch, trial.fs, band, win_s, hop_s))
    return FeatureBlock(
        trial_id=trial.trial_id, modality="EEG", method="eeg_band_psd",
        names=tuple(names), values=np.asarray(values),
    )


def pairwise_entropy_features(trial, cfg=DEFAULT_MI_CONFIG):
    """H(ch_j | ch_i) for all unordered pairs i < j, lexicographic order."""
    _require_eeg(trial)
    c = trial.n_channels
    if c < 2:
        raise SpecError("pairwise entropy needs at least 2 channels")
    names, values = [], []
    for i in range(c):
        for j in range(i + 1, c):
            try:
                ce = conditional_entropy(trial.samples[i], trial.samples[j], cfg)
            except SpecError as e:
                raise SpecError(
                    f"trial {trial.trial_id} pair "
                    f"({trial.channels[i]}, {trial.channels[j]}): {e}"
                ) from e
            names.append(f"ce_{trial.channels[j]}_given_{trial.channels[i]}")
            values.append(ce)
    return FeatureBlock(
        trial_id=trial.trial_id, modality="EEG", method="eeg_entropy",
        names=tuple(names), values=np.asarray(values),
    )


def render_topo_band(band_values, channels, layout: ScalpLayout, grid=TOPO_GRID):
    """Interpolate per-channel values onto the head disc.

    Values are min-max normalised to [0,1] (an all-equal vector renders as a
    uniform 0.5 field), interpolated with a piecewise-cubic scheme inside the
    electrode hull, extended by nearest electrode between hull and disc edge,
    and zeroed outside the disc.
    """
    values = np.asarray(band_values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise SpecError("band values must be finite")
    if values.size != len(channels) or values.size < 3:
        raise SpecError(
            f"need one value per channel and >= 3 channels, got {values.size} "
            f"values for {len(channels)} channels"
        )
    points = np.asarray(layout.positions(channels), dtype=np.float64)

    lo, hi = values.min(), values.max()
    if hi == lo:
        norm = np.full(values.shape, 0.5)
    else:
        norm = (values - lo) / (hi - lo)

    # canonical point order so channel permutations render identically
    order = np.lexsort((points[:, 1], points[:, 0]))
    points, norm = points[order], norm[order]

    axis = np.linspace(-1.0, 1.0, grid)
    uu, vv = np.meshgrid(axis, axis[::-1])            # row 0 = top of head
    mask = uu ** 2 + vv ** 2 <= 1.0

    cubic = CloughTocher2DInterpolator(points, norm)
    field = cubic(uu, vv)
    hole = ~np.isfinite(field)
    if np.any(hole):
        nearest = NearestNDInterpolator(points, norm)
        field[hole] = nearest(uu[hole], vv[hole])
    field = np.clip(field, 0.0, 1.0)
    field[~mask] = 0.0
    return TopoImage(grid=field, mask=mask)


def compose_rgb_topo(theta, alpha_img, beta, band_maxima):
    """Blend three band maps into an RGB image.

    Channel weights are the pre-normalisation trial maxima ratios
    w_k = max_k / sum(max); theta paints red, alpha green, beta blue.  All
    maxima zero degrades to equal 1/3 weights.
    """
    shapes = {theta.grid.shape, alpha_img.grid.shape, beta.grid.shape}
    if len(shapes) != 1:
        raise SpecError(f"band images must share grid size, got {shapes}")
    maxima = np.asarray(band_maxima, dtype=np.float64)
    if maxima.shape != (3,) or np.any(maxima < 0):
        raise SpecError("band_maxima must be 3 non-negative reals")
    total = maxima.sum()
    weights = maxima / total if total > 0 else np.full(3, 1.0 / 3.0)
    stacked = np.stack(
        [weights[0] * theta.grid, weights[1] * alpha_img.grid, weights[2] * beta.grid],
        axis=-1,
    )
    return to_uint8(stacked)


def _band_matrix(trial, bands, win_s, hop_s):
    """Band powers [band x channel] for one trial (or slice of one)."""
    rows = []
    for band in bands:
        rows.append([
            welch_band_power(ch, trial.fs, band, win_s, hop_s)
            for ch in trial.samples
        ])
    return np.asarray(rows)


def trial_topo_rgb(trial, layout, grid=TOPO_GRID, bands=EEG_BANDS,
                   win_s=DEFAULT_WIN_S, hop_s=DEFAULT_HOP_S):
    """Composed RGB topo map of a whole trial."""
    _require_eeg(trial)
    powers = _band_matrix(trial, bands, win_s, hop_s)
    images = [
        render_topo_band(powers[k], trial.channels, layout, grid)
        for k in range(3)
    ]
    return compose_rgb_topo(*images, band_maxima=powers.max(axis=1))


def eeg_deep_features(trial, layout, provider, pca):
    """Topo image -> 224x224 -> provider embedding -> PCA (<= 30 dims)."""
    _require_eeg(trial)
    if pca.n_components > 30:
        raise SpecError(
            f"deep-feature PCA must have <= 30 components, got {pca.n_components}"
        )
    rgb = resize_rgb(trial_topo_rgb(trial, layout))
    try:
        vec = provider.embed(rgb)
    except Exception as e:
        raise SpecError(f"embedding failed for trial {trial.trial_id}: {e}") from e
    comps = pca.transform(np.asarray(vec)[None, :])[0]
    return FeatureBlock(
        trial_id=trial.trial_id, modality="EEG", method="eeg_deep",
        names=tuple(f"deep_topo_pc{k}" for k in range(comps.size)),
        values=comps,
    )


def per_second_eeg_images(trial, layout, grid=TOPO_GRID, bands=EEG_BANDS):
    """One composed RGB topo per whole second (floor rule, no overlap)."""
    _require_eeg(trial)
    spf = int(round(trial.fs))
    n_seconds = trial.samples.shape[1] // spf
    if n_seconds < 1:
        raise SpecError(
            f"trial {trial.trial_id}: need at least one whole second of data"
        )
    out = []
    for k in range(n_seconds):
        chunk = TrialRecording(
            trial_id=f"{trial.trial_id}[{k}]",
            subject_id=trial.subject_id,
            modality="EEG",
            channels=trial.channels,
            samples=trial.samples[:, k * spf:(k + 1) * spf],
            fs=trial.fs,
        )
        out.append(trial_topo_rgb(chunk, layout, grid=grid, bands=bands))
    return out
