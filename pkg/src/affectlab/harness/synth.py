"""Synthetic multi-modal datasets with planted, decodable class effects.

Every trial gets ratings on a 1-9 scale plus signals whose statistics
depend on the High/Low side of each planted target:

* EEG: unit-variance pink noise per channel; a planted band effect adds an
  in-band sinusoid at the chosen electrodes when the target is High.
* Cardiac: a PPG-like pulse train; an HR effect shifts the beat rate, and
  beat-to-beat jitter gives pNN50 something to measure.
* GSR: slow drift plus discrete conductance responses; an SCR effect
  raises the event rate.
* Landmarks: a fixed 49-point template with frame jitter; a mouth effect
  pulls the lip corners outward and up, a brow effect raises the brows.

All randomness flows from SeedSequence(seed, subject, trial, stream), so
regenerating with the same config is byte-identical, and any single trial
can be regenerated in isolation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data import N_LANDMARKS, FaceLandmarkTrack, LandmarkFrame, \
    write_landmarks_csv, write_signal_csv
from ..imaging import write_png
from ..layouts import load_layout
from ..validation import SpecError

TARGETS = ("valence", "arousal", "liking")
BAND_TONES = {"theta": 5.5, "alpha": 10.0, "beta": 20.0}

_DEFAULT_ELECTRODES = {
    "valence": ("O1", "O2"),
    "arousal": ("AF3", "AF4"),
    "liking": ("T7", "T8"),
}
_DEFAULT_BANDS = {"valence": "alpha", "arousal": "beta", "liking": "theta"}


@dataclass(frozen=True)
class PlantedEffect:
    """One decodable class difference.

    kind: "eeg_band" (sinusoid at electrodes), "cardiac_hr" (beat-rate
    shift), "gsr_scr" (event-rate shift), or "face_mouth" (landmark
    displacement).  size 0 plants nothing.
    """

    kind: str = "eeg_band"
    size: float = 1.0
    band: str | None = None
    electrodes: tuple = ()

    def __post_init__(self):
        if self.kind not in ("eeg_band", "cardiac_hr", "gsr_scr", "face_mouth"):
            raise SpecError(f"unknown planted-effect kind {self.kind!r}")
        if self.size < 0:
            raise SpecError(f"effect size must be >= 0, got {self.size}")
        if self.band is not None and self.band not in BAND_TONES:
            raise SpecError(f"unknown band {self.band!r}")


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 10
    trials_per_subject: int = 20
    trial_length_s: float = 12.0
    montage: str = "14ch"
    effects: dict = field(default_factory=dict)    # target -> PlantedEffect
    seed: int = 0
    dataset_id: str = "synth"
    fs_eeg: float = 128.0
    fs_cardiac: float = 128.0
    fs_gsr: float = 32.0
    landmark_fps: float = 4.0
    face_crops: bool = False    # also render 224x224 crop PNGs per frame

    def __post_init__(self):
        if self.n_subjects < 1 or self.trials_per_subject < 1:
            raise SpecError("need at least one subject and one trial")
        if self.trial_length_s < 10.0:
            raise SpecError(
                f"trial length must be >= 10 s, got {self.trial_length_s}"
            )
        if self.montage not in ("32ch", "14ch"):
            raise SpecError(f"montage must be '32ch' or '14ch', got {self.montage!r}")
        for target, eff in self.effects.items():
            if target not in TARGETS:
                raise SpecError(f"unknown effect target {target!r}")
            if not isinstance(eff, PlantedEffect):
                raise SpecError(f"effect for {target!r} must be a PlantedEffect")

    @property
    def layout_ref(self):
        return "montage32" if self.montage == "32ch" else "montage14"


def synth_config_from_json(text) -> SynthConfig:
    """Build a SynthConfig from a JSON config document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"synth config is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SpecError("synth config must be a JSON object")
    effects = {}
    for target, raw in dict(doc.pop("effects", {})).items():
        if not isinstance(raw, dict):
            raise SpecError(f"effect for {target!r} must be an object")
        raw = dict(raw)
        raw["electrodes"] = tuple(raw.get("electrodes", ()))
        try:
            effects[target] = PlantedEffect(**raw)
        except TypeError as e:
            raise SpecError(f"bad effect for {target!r}: {e}") from e
    try:
        return SynthConfig(effects=effects, **doc)
    except TypeError as e:
        raise SpecError(f"bad synth config: {e}") from e


def _rng(cfg, subject_idx, trial_idx, stream):
    return np.random.default_rng(
        np.random.SeedSequence(cfg.seed, spawn_key=(subject_idx, trial_idx, stream))
    )


def _pink_noise(rng, n):
    """1/f-amplitude noise, unit variance."""
    spec = rng.normal(size=n // 2 + 1) + 1j * rng.normal(size=n // 2 + 1)
    freqs = np.fft.rfftfreq(n, d=1.0)
    freqs[0] = freqs[1]
    spec = spec / np.sqrt(freqs)
    spec[0] = 0.0
    x = np.fft.irfft(spec, n)
    return x / x.std()


def _trial_sides(labels, midpoint):
    return {t: labels[t] > midpoint for t in TARGETS}


def _eeg_signal(cfg, rng, channels, sides):
    n = int(round(cfg.trial_length_s * cfg.fs_eeg))
    t = np.arange(n) / cfg.fs_eeg
    samples = np.vstack([_pink_noise(rng, n) for _ in channels])
    for target, eff in cfg.effects.items():
        if eff.kind != "eeg_band" or eff.size == 0 or not sides[target]:
            continue
        band = eff.band or _DEFAULT_BANDS[target]
        electrodes = eff.electrodes or _DEFAULT_ELECTRODES[target]
        tone_f = BAND_TONES[band]
        for name in electrodes:
            if name not in channels:
                raise SpecError(
                    f"effect electrode {name!r} not in the {cfg.montage} montage"
                )
            idx = channels.index(name)
            phase = rng.uniform(0, 2 * np.pi)
            samples[idx] += eff.size * np.sin(2 * np.pi * tone_f * t + phase)
    return samples


def _cardiac_signal(cfg, rng, sides):
    n = int(round(cfg.trial_length_s * cfg.fs_cardiac))
    t = np.arange(n) / cfg.fs_cardiac
    hr = 65.0
    for target, eff in cfg.effects.items():
        if eff.kind == "cardiac_hr" and eff.size > 0 and sides[target]:
            hr += 10.0 * eff.size
    beat = 60.0 / hr
    centers = []
    c = rng.uniform(0.2, 0.2 + beat)
    while c < cfg.trial_length_s:
        centers.append(c)
        c += beat + rng.normal(0.0, 0.04)
    x = rng.normal(0.0, 0.02, n) + 0.1
    for c in centers:
        x += np.exp(-0.5 * ((t - c) / 0.045) ** 2)
    return x[None, :]


def _gsr_signal(cfg, rng, sides):
    n = int(round(cfg.trial_length_s * cfg.fs_gsr))
    t = np.arange(n) / cfg.fs_gsr
    rate_per_min = 6.0
    for target, eff in cfg.effects.items():
        if eff.kind == "gsr_scr" and eff.size > 0 and sides[target]:
            rate_per_min += 6.0 * eff.size
    drift = np.cumsum(rng.normal(0, 1e-3, n))
    x = 2.0 + 0.2 * np.sin(2 * np.pi * t / cfg.trial_length_s + rng.uniform(0, 6.28))
    x += drift + rng.normal(0, 5e-3, n)
    n_events = rng.poisson(rate_per_min * cfg.trial_length_s / 60.0)
    for _ in range(n_events):
        onset = rng.uniform(0.0, cfg.trial_length_s - 2.0)
        amp = rng.uniform(0.25, 0.5)
        rise, decay = 0.4, 1.5
        dt = t - onset
        shape = np.where(dt > 0, (1 - np.exp(-dt / rise)) * np.exp(-dt / decay), 0.0)
        x += amp * shape
    return x[None, :]


def _face_template():
    p = np.zeros((N_LANDMARKS, 2))
    for i, x in enumerate(np.linspace(60, 110, 5)):
        p[i] = (x, 80 - (6 if i == 2 else 0))
    for i, x in enumerate(np.linspace(170, 220, 5)):
        p[5 + i] = (x, 80 - (6 if i == 2 else 0))
    for i, y in enumerate(np.linspace(100, 150, 4)):
        p[10 + i] = (140, y)
    for i, x in enumerate(np.linspace(120, 160, 5)):
        p[14 + i] = (x, 160)
    p[19] = (65, 105); p[20] = (78, 98); p[21] = (92, 98)
    p[22] = (105, 105); p[23] = (92, 112); p[24] = (78, 112)
    p[25] = (175, 105); p[26] = (188, 98); p[27] = (202, 98)
    p[28] = (215, 105); p[29] = (202, 112); p[30] = (188, 112)
    p[31] = (100, 200); p[37] = (180, 200)
    for i, x in enumerate(np.linspace(113, 167, 5)):
        p[32 + i] = (x, 190 - (4 if i == 2 else 0))
    for i, x in enumerate(np.linspace(167, 113, 5)):
        p[38 + i] = (x, 210 + (4 if i == 2 else 0))
    p[43] = (108, 200); p[46] = (172, 200)
    p[44] = (128, 195); p[45] = (152, 195)
    p[47] = (152, 205); p[48] = (128, 205)
    return p


def _landmark_track(cfg, rng, trial_id, sides):
    base = _face_template()
    for target, eff in cfg.effects.items():
        if eff.kind != "face_mouth" or eff.size == 0 or not sides[target]:
            continue
        # smile: corners out and up; brows up; mouth slightly open
        base[31] += (-3.0 * eff.size, -2.0 * eff.size)
        base[37] += (3.0 * eff.size, -2.0 * eff.size)
        base[:10, 1] -= 2.0 * eff.size
        base[38:43, 1] += 1.5 * eff.size
        base[47:49, 1] += 1.5 * eff.size
    n_frames = int(cfg.trial_length_s * cfg.landmark_fps)
    frames = []
    for k in range(n_frames):
        pts = base + rng.normal(0.0, 0.5, (N_LANDMARKS, 2))
        frames.append(LandmarkFrame(
            t=k / cfg.landmark_fps,
            points=pts,
            face_box=(40.0, 30.0, 240.0, 220.0),
        ))
    return FaceLandmarkTrack(trial_id=trial_id, frames=tuple(frames))


def _render_crop(frame):
    """Rasterize a landmark frame as a dark 224x224 crop with bright dots."""
    img = np.full((224, 224, 3), 30, dtype=np.uint8)
    bx, by, bw, bh = frame.face_box
    px = np.clip((frame.points[:, 0] - bx) / bw * 223, 0, 223).astype(int)
    py = np.clip((frame.points[:, 1] - by) / bh * 223, 0, 223).astype(int)
    for x, y in zip(px, py):
        img[max(0, y - 2):y + 3, max(0, x - 2):x + 3] = (220, 200, 180)
    return img


def synth_generate(cfg: SynthConfig, out_dir) -> Path:
    """Write the dataset under out_dir; returns the manifest path."""
    out = Path(out_dir)
    (out / "signals").mkdir(parents=True, exist_ok=True)
    (out / "landmarks").mkdir(exist_ok=True)
    layout = load_layout(cfg.layout_ref)
    channels = [name for name in layout.entries]
    midpoint = 5.0

    subjects = []
    for si in range(cfg.n_subjects):
        sid = f"s{si + 1:02d}"
        trials = []
        for ti in range(cfg.trials_per_subject):
            trial_id = f"{sid}_t{ti + 1:02d}"
            lab_rng = _rng(cfg, si, ti, 0)
            quadrant = ti % 4
            high_v = quadrant in (0, 3)
            high_a = quadrant in (0, 1)
            high_l = ti % 2 == 0
            labels = {
                "valence": lab_rng.uniform(6.0, 9.0) if high_v else lab_rng.uniform(1.0, 4.0),
                "arousal": lab_rng.uniform(6.0, 9.0) if high_a else lab_rng.uniform(1.0, 4.0),
                "liking": lab_rng.uniform(6.0, 9.0) if high_l else lab_rng.uniform(1.0, 4.0),
            }
            sides = _trial_sides(labels, midpoint)

            eeg = _eeg_signal(cfg, _rng(cfg, si, ti, 1), channels, sides)
            ppg = _cardiac_signal(cfg, _rng(cfg, si, ti, 2), sides)
            gsr = _gsr_signal(cfg, _rng(cfg, si, ti, 3), sides)
            track = _landmark_track(cfg, _rng(cfg, si, ti, 4), trial_id, sides)

            rel = {
                "EEG": f"signals/{trial_id}_eeg.csv",
                "PPG": f"signals/{trial_id}_ppg.csv",
                "GSR": f"signals/{trial_id}_gsr.csv",
            }
            write_signal_csv(out / rel["EEG"], eeg)
            write_signal_csv(out / rel["PPG"], ppg)
            write_signal_csv(out / rel["GSR"], gsr)
            lm_rel = f"landmarks/{trial_id}.csv"
            write_landmarks_csv(out / lm_rel, track)

            entry = {
                "trial_id": trial_id,
                "labels": {k: round(float(v), 3) for k, v in labels.items()},
                "signals": rel,
                "landmarks": lm_rel,
            }
            if cfg.face_crops:
                crop_rel = f"faces/{trial_id}"
                crop_dir = out / crop_rel
                crop_dir.mkdir(parents=True, exist_ok=True)
                for k, frame in enumerate(track.frames):
                    write_png(crop_dir / f"f{k:03d}.png", _render_crop(frame))
                entry["face_dir"] = crop_rel
            trials.append(entry)
        subjects.append({"subject_id": sid, "trials": trials})

    manifest = {
        "dataset_id": cfg.dataset_id,
        "rating_scale": {"min": 1.0, "max": 9.0},
        "sampling_rates": {"EEG": cfg.fs_eeg, "PPG": cfg.fs_cardiac,
                           "GSR": cfg.fs_gsr},
        "channel_names": {"EEG": channels, "PPG": ["pleth"], "GSR": ["gsr"]},
        "scalp_layout_ref": cfg.layout_ref,
        "eeg_raw": False,
        "notes": "synthetic dataset with planted effects",
        "subjects": subjects,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest_path
