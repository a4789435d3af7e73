"""Heart-rate and HRV features from ECG/PPG, plus spectrogram-image deep features.

Beat detection runs on a conditioned copy of the channel: a 0.25 s moving
average removes high-frequency noise, min-max scaling maps the result to
[0, 1], and peaks are kept only if they clear 0.5 and sit at least 0.5 s
apart.  That floor doubles as the physiological refractory bound, so every
RR interval is >= 0.5 s by construction.

Heart rate is the peak count normalized to beats per minute over the actual
trial duration.  pNN50 is the percentage of successive RR differences that
strictly exceed 50 ms; a tiny guard band keeps float noise on an exactly-50 ms
difference from flipping the comparison.

The deep branch renders the 0-5 Hz log-power spectrogram of one channel as a
Parula-colored 224x224 image, embeds it, and projects the embedding to at
most 30 components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import FeatureBlock, TrialRecording
from .dsp import detect_peaks, minmax_scale, moving_average, stft_spectrogram
from .imaging import apply_parula, resize_rgb, to_uint8
from .validation import SpecError

SMOOTH_S = 0.25
PEAK_MIN_DIST_S = 0.5
PEAK_MIN_HEIGHT = 0.5
PNN_THRESHOLD_S = 0.050
# Differences within this band of the 50 ms threshold count as exactly equal.
_PNN_GUARD_S = 1e-12

SPECTRO_FMAX_HZ = 5.0
SPECTRO_WIN_S = 4.0
SPECTRO_HOP_S = 1.0
_LOG_EPS = 1e-12

_CARDIAC = ("ECG", "PPG")


@dataclass(frozen=True)
class RrSeries:
    """Inter-beat intervals in seconds, tagged with the channel they came from."""

    intervals: np.ndarray
    source_channel: str

    def __post_init__(self):
        iv = np.asarray(self.intervals, dtype=np.float64)
        object.__setattr__(self, "intervals", iv)

    def __len__(self):
        return self.intervals.size


def _require_cardiac(trial):
    if trial.modality not in _CARDIAC:
        raise SpecError(
            f"expected an ECG or PPG trial, got modality {trial.modality!r}"
        )


def cardiac_peaks(trial, channel=0):
    """Beat indices for one channel: smooth, scale to [0, 1], detect peaks."""
    _require_cardiac(trial)
    if not 0 <= channel < trial.n_channels:
        raise SpecError(
            f"channel {channel} out of range for {trial.n_channels}-channel trial"
        )
    x = moving_average(trial.samples[channel], trial.fs, SMOOTH_S)
    x = minmax_scale(x)
    return detect_peaks(x, trial.fs, PEAK_MIN_DIST_S, PEAK_MIN_HEIGHT)


def rr_intervals(trial, channel=0):
    """RR series (seconds) from detected beats; needs >= 2 beats."""
    peaks = cardiac_peaks(trial, channel)
    if peaks.size < 2:
        raise SpecError(
            f"trial {trial.trial_id}: need at least 2 beats for RR intervals, "
            f"got {peaks.size}"
        )
    return RrSeries(
        intervals=np.diff(peaks) / trial.fs,
        source_channel=trial.channels[channel],
    )


def heart_rate(trial, channel=0):
    """Beats per minute: peak count scaled by actual duration."""
    peaks = cardiac_peaks(trial, channel)
    return 60.0 * peaks.size / trial.duration_s


def pnn50(rr):
    """Percent of successive RR differences strictly above 50 ms."""
    iv = rr.intervals
    if iv.size < 2:
        raise SpecError(
            f"pNN50 needs at least 2 intervals, got {iv.size}"
        )
    d = np.abs(np.diff(iv))
    return 100.0 * np.count_nonzero(d > PNN_THRESHOLD_S + _PNN_GUARD_S) / d.size


def cardiac_spectrogram_image(trial, channel=0):
    """0-5 Hz log-power spectrogram of one channel as a Parula RGB image."""
    _require_cardiac(trial)
    if trial.fs <= 10.0:
        raise SpecError(
            f"cardiac spectrogram needs fs > 10 Hz, got {trial.fs}"
        )
    if not 0 <= channel < trial.n_channels:
        raise SpecError(
            f"channel {channel} out of range for {trial.n_channels}-channel trial"
        )
    spec = stft_spectrogram(
        trial.samples[channel], trial.fs,
        fmax=SPECTRO_FMAX_HZ, win_s=SPECTRO_WIN_S, hop_s=SPECTRO_HOP_S,
    )
    return _spectrogram_rgb(spec.values)


def _spectrogram_rgb(power):
    """log10 -> per-image min-max -> Parula -> 224x224 uint8.

    Row order is flipped so low frequencies land at the bottom of the image.
    """
    logp = np.log10(power + _LOG_EPS)
    lo, hi = logp.min(), logp.max()
    if hi > lo:
        norm = (logp - lo) / (hi - lo)
    else:
        norm = np.zeros_like(logp)
    rgb = apply_parula(norm[::-1])
    return resize_rgb(to_uint8(rgb))


def cardiac_features(trial, provider, pca, image_channel=0):
    """Per-channel [HR, pNN50] plus 30 deep features of one spectrogram image."""
    _require_cardiac(trial)
    if pca.n_components > 30:
        raise SpecError(
            f"deep-feature PCA must have <= 30 components, got {pca.n_components}"
        )
    names = []
    values = []
    for ch in range(trial.n_channels):
        label = trial.channels[ch]
        names += [f"hr_{label}", f"pnn50_{label}"]
        values += [heart_rate(trial, ch), pnn50(rr_intervals(trial, ch))]
    rgb = cardiac_spectrogram_image(trial, image_channel)
    try:
        vec = provider.embed(rgb)
    except Exception as e:
        raise SpecError(f"embedding failed for trial {trial.trial_id}: {e}") from e
    comps = pca.transform(np.asarray(vec)[None, :])[0]
    names += [f"deep_spec_pc{k}" for k in range(comps.size)]
    values += list(comps)
    return FeatureBlock(
        trial_id=trial.trial_id, modality=trial.modality, method="cardiac",
        names=tuple(names), values=np.asarray(values, dtype=np.float64),
    )
