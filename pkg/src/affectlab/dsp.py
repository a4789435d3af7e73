"""Shared signal kernels: smoothing, band-pass, Welch band power, STFT
spectrograms, peak detection, and difference-moment statistics.

Conventions (documented once, used everywhere): Hann windows, 1.0 s frames
with 0.5 s hop unless a caller overrides, population (1/N) standard
deviations, and half-open band membership low <= f < high so adjacent bands
partition the spectrum without double counting shared edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .validation import SpecError, as_signal, check_fs

DEFAULT_WIN_S = 1.0
DEFAULT_HOP_S = 0.5


@dataclass(frozen=True)
class BandDefinition:
    name: str
    low: float
    high: float

    def __post_init__(self):
        if not 0 < self.low < self.high:
            raise SpecError(f"band {self.name}: need 0 < low < high")


THETA = BandDefinition("theta", 4.0, 7.0)
ALPHA = BandDefinition("alpha", 7.0, 13.0)
BETA = BandDefinition("beta", 13.0, 30.0)
EEG_BANDS = (THETA, ALPHA, BETA)


@dataclass(frozen=True)
class SpectrogramMatrix:
    values: np.ndarray       # [freq-bin x time-frame], power
    freq_axis: np.ndarray    # Hz, ascending
    time_axis: np.ndarray    # seconds, frame centers
    fs: float


def moving_average(x, fs, window_s):
    """Centered moving average; windows shrink at the edges.

    Window length is round(window_s * fs) samples (even lengths extend one
    sample further to the right of center).
    """
    x = as_signal(x, "signal")
    fs = check_fs(fs)
    length = int(round(window_s * fs))
    if length < 1:
        raise SpecError(f"window_s * fs must be >= 1, got {window_s * fs:.3g}")
    n = x.size
    half_l = (length - 1) // 2
    half_r = length // 2
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(n)
    lo = np.clip(idx - half_l, 0, n)
    hi = np.clip(idx + half_r + 1, 0, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


def bandpass(x, fs, low, high):
    """Zero-phase band-pass: 4th-order Butterworth run forward and backward."""
    x = as_signal(x, "signal")
    fs = check_fs(fs)
    if not 0 < low < high < fs / 2:
        raise SpecError(f"band [{low}, {high}] Hz invalid for fs={fs}")
    sos = sps.butter(4, [low, high], btype="bandpass", fs=fs, output="sos")
    return sps.sosfiltfilt(sos, x)


def _frames(x, win, hop):
    n_frames = (x.size - win) // hop + 1
    if n_frames < 1:
        raise SpecError(f"signal shorter than one window ({x.size} < {win} samples)")
    strided = np.lib.stride_tricks.sliding_window_view(x, win)[::hop]
    return strided[:n_frames]


def _frame_psd(x, fs, win_s, hop_s):
    """One-sided PSD per frame (Hann window, density scaling).

    Returns (psd [frame x bin], freqs)."""
    win = int(round(win_s * fs))
    hop = max(1, int(round(hop_s * fs)))
    if hop > win:
        raise SpecError("hop_s must be <= win_s")
    frames = _frames(x, win, hop)
    window = np.hanning(win)
    spec = np.fft.rfft(frames * window, axis=1)
    psd = (np.abs(spec) ** 2) / (fs * np.sum(window ** 2))
    psd[:, 1:] *= 2.0
    if win % 2 == 0:
        psd[:, -1] /= 2.0
    freqs = np.fft.rfftfreq(win, d=1.0 / fs)
    return psd, freqs, win, hop


def welch_band_power(x, fs, band, win_s=DEFAULT_WIN_S, hop_s=DEFAULT_HOP_S):
    """Mean over frames of integrated power in [band.low, band.high).

    Integration is sum(PSD) * bin width, so a unit sine contributes ~0.5
    (its variance) to its band.  Band membership is half-open; see module
    docstring.
    """
    x = as_signal(x, "signal")
    fs = check_fs(fs)
    if win_s * fs < 4:
        raise SpecError(f"win_s * fs must be >= 4, got {win_s * fs:.3g}")
    psd, freqs, win, _ = _frame_psd(x, fs, win_s, hop_s)
    sel = (freqs >= band.low) & (freqs < band.high)
    df = fs / win
    return float(np.mean(np.sum(psd[:, sel], axis=1) * df))


def stft_spectrogram(x, fs, fmax, win_s=DEFAULT_WIN_S, hop_s=DEFAULT_HOP_S):
    """Framewise power spectrogram truncated to bins <= fmax."""
    x = as_signal(x, "signal")
    fs = check_fs(fs)
    if not fmax < fs / 2:
        raise SpecError(f"fmax {fmax} must be below Nyquist {fs / 2}")
    psd, freqs, win, hop = _frame_psd(x, fs, win_s, hop_s)
    sel = freqs <= fmax
    n_frames = psd.shape[0]
    centers = (np.arange(n_frames) * hop + win / 2.0) / fs
    return SpectrogramMatrix(
        values=psd[:, sel].T.copy(),
        freq_axis=freqs[sel].copy(),
        time_axis=centers,
        fs=fs,
    )


def detect_peaks(x, fs, min_dist_s, min_height):
    """Strict local maxima of height >= min_height, at least min_dist_s apart.

    A flat run of equal values that drops away on both sides counts as one
    maximum, indexed at the run's left-middle sample.  When two candidates
    are closer than min_dist_s the taller wins (ties go to the earlier
    index).  Returns ascending indices.
    """
    x = as_signal(x, "signal")
    fs = check_fs(fs)
    if min_dist_s <= 0:
        raise SpecError("min_dist_s must be positive")
    if x.size < 3:
        return np.array([], dtype=np.intp)
    cand = _plateau_maxima(x)
    cand = cand[x[cand] >= min_height]
    if cand.size == 0:
        return np.array([], dtype=np.intp)
    min_dist = int(round(min_dist_s * fs))
    # taller first, earlier index wins ties
    order = np.lexsort((cand, -x[cand]))
    kept = []
    for i in cand[order]:
        if all(abs(i - j) >= min_dist for j in kept):
            kept.append(i)
    return np.array(sorted(kept), dtype=np.intp)


def _plateau_maxima(x):
    """Indices of interior maxima, flat tops collapsed to one index each."""
    # run starts: positions where the value changes, as run-length segments
    change = np.flatnonzero(np.diff(x) != 0.0)
    starts = np.concatenate(([0], change + 1))
    ends = np.concatenate((change, [x.size - 1]))  # inclusive
    vals = x[starts]
    # interior runs strictly above both neighboring runs
    if starts.size < 3:
        return np.array([], dtype=np.intp)
    up = vals[1:-1] > vals[:-2]
    down = vals[1:-1] > vals[2:]
    hit = np.flatnonzero(up & down) + 1
    return (starts[hit] + (ends[hit] - starts[hit]) // 2).astype(np.intp)


def minmax_scale(x):
    """Scale to [0, 1]; raises on constant input."""
    x = as_signal(x, "signal")
    lo, hi = x.min(), x.max()
    if hi == lo:
        raise SpecError("constant signal: min-max scaling undefined")
    return (x - lo) / (hi - lo)


def diff_moments(x):
    """First/second difference statistics of a series.

    Returns {mean, std, mean_abs_d1, mean_abs_d1_norm, mean_abs_d2,
    mean_abs_d2_norm}.  The *_norm values are computed on the z-scored
    signal (population std); a zero-variance signal defines them as 0.
    """
    x = as_signal(x, "signal", min_len=3)
    mean = float(np.mean(x))
    # the float mean of n equal values need not equal them exactly
    std = 0.0 if np.ptp(x) == 0.0 else float(np.std(x))
    d1 = np.abs(np.diff(x))
    d2 = np.abs(np.diff(x, n=2))
    if std == 0.0:
        norm1 = norm2 = 0.0
    else:
        z = (x - mean) / std
        norm1 = float(np.mean(np.abs(np.diff(z))))
        norm2 = float(np.mean(np.abs(np.diff(z, n=2))))
    return {
        "mean": mean,
        "std": std,
        "mean_abs_d1": float(np.mean(d1)),
        "mean_abs_d1_norm": norm1,
        "mean_abs_d2": float(np.mean(d2)),
        "mean_abs_d2_norm": norm2,
    }
