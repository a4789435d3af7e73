"""Skin-conductance features: eight time-domain statistics and spectrogram
deep features over the 0-2 Hz range.

The statistical block is [peak_count, mean_abs_peak_height] followed by the
six difference moments from dsp.diff_moments, always in that order.  Peaks
are found on the 0.25 s-smoothed signal after 0-1 scaling (min_dist 1 s,
min_height 0.1), and heights are measured against the smoothed signal's
10th-percentile baseline, which makes them insensitive to constant offset.

A constant recording is legal here, unlike the cardiac path: it simply has
no peaks, so the block degrades to [0, 0, c, 0, 0, 0, 0, 0].
"""

from __future__ import annotations

import numpy as np

from .data import FeatureBlock
from .dsp import detect_peaks, diff_moments, minmax_scale, moving_average, \
    stft_spectrogram
from .validation import SpecError
from .cardiac import _spectrogram_rgb

SMOOTH_S = 0.25
PEAK_MIN_DIST_S = 1.0
PEAK_MIN_HEIGHT = 0.1
BASELINE_PERCENTILE = 10.0

SPECTRO_FMAX_HZ = 2.0
SPECTRO_WIN_S = 4.0
SPECTRO_HOP_S = 1.0

STAT_NAMES = (
    "scr_count", "scr_mean_height",
    "mean", "std",
    "mean_abs_d1", "mean_abs_d1_norm",
    "mean_abs_d2", "mean_abs_d2_norm",
)


def _require_gsr(trial):
    if trial.modality != "GSR":
        raise SpecError(f"expected a GSR trial, got modality {trial.modality!r}")
    if trial.n_channels != 1:
        raise SpecError(
            f"GSR features expect a single channel, got {trial.n_channels}"
        )


def gsr_peaks(trial):
    """Skin-conductance-response peak indices on the smoothed channel."""
    _require_gsr(trial)
    raw = trial.samples[0]
    if np.ptp(raw) == 0.0:
        # averaging equal values leaves float wobble; keep the constant exact
        return np.array([], dtype=np.intp), raw.astype(np.float64).copy()
    x = moving_average(raw, trial.fs, SMOOTH_S)
    if x.max() == x.min():
        return np.array([], dtype=np.intp), x
    scaled = minmax_scale(x)
    peaks = detect_peaks(scaled, trial.fs, PEAK_MIN_DIST_S, PEAK_MIN_HEIGHT)
    return peaks, x


def gsr_stat_features(trial):
    """The eight time-domain statistics as a FeatureBlock."""
    _require_gsr(trial)
    if trial.duration_s < 3.0:
        raise SpecError(
            f"trial {trial.trial_id}: GSR statistics need >= 3 s of signal"
        )
    peaks, smoothed = gsr_peaks(trial)
    if peaks.size:
        baseline = np.percentile(smoothed, BASELINE_PERCENTILE)
        mean_height = float(np.mean(np.abs(smoothed[peaks] - baseline)))
    else:
        mean_height = 0.0
    mom = diff_moments(smoothed)
    values = np.array([
        float(peaks.size), mean_height,
        mom["mean"], mom["std"],
        mom["mean_abs_d1"], mom["mean_abs_d1_norm"],
        mom["mean_abs_d2"], mom["mean_abs_d2_norm"],
    ])
    return FeatureBlock(
        trial_id=trial.trial_id, modality="GSR", method="gsr_stats",
        names=STAT_NAMES, values=values,
    )


def gsr_spectrogram_image(trial):
    """0-2 Hz log-power spectrogram as a Parula RGB image."""
    _require_gsr(trial)
    spec = stft_spectrogram(
        trial.samples[0], trial.fs,
        fmax=SPECTRO_FMAX_HZ, win_s=SPECTRO_WIN_S, hop_s=SPECTRO_HOP_S,
    )
    return _spectrogram_rgb(spec.values)


def gsr_spectrogram_features(trial, provider, pca):
    """Statistics ++ 30 deep spectrogram features (38 values total)."""
    if pca.n_components > 30:
        raise SpecError(
            f"deep-feature PCA must have <= 30 components, got {pca.n_components}"
        )
    stats = gsr_stat_features(trial)
    rgb = gsr_spectrogram_image(trial)
    try:
        vec = provider.embed(rgb)
    except Exception as e:
        raise SpecError(f"embedding failed for trial {trial.trial_id}: {e}") from e
    comps = pca.transform(np.asarray(vec)[None, :])[0]
    return FeatureBlock(
        trial_id=trial.trial_id, modality="GSR", method="gsr",
        names=stats.names + tuple(f"deep_spec_pc{k}" for k in range(comps.size)),
        values=np.concatenate([stats.values, comps]),
    )
