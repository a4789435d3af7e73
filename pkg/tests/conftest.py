import numpy as np
import pytest

from affectlab.data import TrialRecording
from affectlab.embedding import StubEmbeddingProvider


def make_recording(samples, fs=128.0, modality="EEG", channels=None,
                   trial_id="t1", subject_id="s1"):
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if channels is None:
        channels = tuple(f"ch{i}" for i in range(samples.shape[0]))
    return TrialRecording(trial_id=trial_id, subject_id=subject_id,
                          modality=modality, channels=tuple(channels),
                          samples=samples, fs=fs)


def pulse_train(bpm, duration_s, fs=128.0, sigma=0.03, start=0.3):
    """Gaussian-bump beat signal; beats at exact spacing 60/bpm."""
    t = np.arange(int(round(duration_s * fs))) / fs
    x = np.zeros_like(t)
    for c in np.arange(start, duration_s, 60.0 / bpm):
        x += np.exp(-0.5 * ((t - c) / sigma) ** 2)
    return x


def sine(freq_hz, duration_s, fs=128.0, amp=1.0, phase=0.0):
    t = np.arange(int(round(duration_s * fs))) / fs
    return amp * np.sin(2 * np.pi * freq_hz * t + phase)


@pytest.fixture(scope="session")
def provider():
    return StubEmbeddingProvider(seed=0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    rows = {}
    for status in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance" not in rep.nodeid:
                continue
            name = rep.nodeid.split("::")[-1]
            if getattr(rep, "when", "call") == "call" or status == "skipped":
                rows[name] = status.upper()
    if rows:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name in sorted(rows):
            terminalreporter.write_line(f"{rows[name]:>7}  {name}")
