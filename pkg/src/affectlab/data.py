"""Dataset manifests, trial ingestion, and the shared in-memory types.

A dataset on disk is a JSON manifest plus one headerless CSV per
(trial, modality); rows are time samples, columns are channels, and the
sampling rate lives in the manifest.  Channel names also live in the manifest
(``channel_names``) because the CSVs carry no header.  Landmark tracks are CSV
with columns t, x1..x49, y1..y49, bx, by, bw, bh.  All paths are relative to
the manifest directory.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .validation import SpecError

MODALITIES = ("EEG", "ECG", "PPG", "GSR")

LOW = "Low"
HIGH = "High"
CLASS_LABELS = (LOW, HIGH)
EMOTION_CLASSES = ("HVHA", "LVHA", "LVLA", "HVLA")

N_LANDMARKS = 49


@dataclass(frozen=True)
class TrialLabels:
    valence: float
    arousal: float
    scale_midpoint: float
    liking: float | None = None


@dataclass(frozen=True)
class TrialRecording:
    """One modality of one trial. ``samples`` is [channel x time]."""

    trial_id: str
    subject_id: str
    modality: str
    channels: tuple[str, ...]
    samples: np.ndarray
    fs: float

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise SpecError(f"unknown modality {self.modality!r}")
        if self.fs <= 0:
            raise SpecError(f"fs must be positive, got {self.fs}")
        s = self.samples
        if s.ndim != 2 or s.shape[0] != len(self.channels) or len(self.channels) < 1:
            raise SpecError(
                f"samples must be [channel x time] matching {len(self.channels)} "
                f"channels, got shape {s.shape}"
            )
        if not np.all(np.isfinite(s)):
            raise SpecError(f"trial {self.trial_id}: non-finite samples after load")

    @property
    def n_channels(self):
        return len(self.channels)

    @property
    def duration_s(self):
        return self.samples.shape[1] / self.fs


@dataclass(frozen=True)
class LandmarkFrame:
    t: float
    points: np.ndarray          # [49 x 2] pixels
    face_box: tuple[float, float, float, float]


@dataclass(frozen=True)
class FaceLandmarkTrack:
    trial_id: str
    frames: tuple[LandmarkFrame, ...]

    def __post_init__(self):
        prev = -np.inf
        for fr in self.frames:
            if fr.points.shape != (N_LANDMARKS, 2):
                raise SpecError(
                    f"trial {self.trial_id}: expected {N_LANDMARKS} landmark points, "
                    f"got {fr.points.shape}"
                )
            if fr.face_box[2] <= 0 or fr.face_box[3] <= 0:
                raise SpecError(f"trial {self.trial_id}: face box w/h must be positive")
            if fr.t <= prev:
                raise SpecError(f"trial {self.trial_id}: frame timestamps must increase")
            prev = fr.t


@dataclass(frozen=True)
class FeatureBlock:
    """Named, ordered feature vector with provenance."""

    trial_id: str
    modality: str
    method: str
    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size != len(self.names):
            raise SpecError(
                f"feature block {self.method}: {len(self.names)} names vs "
                f"{v.shape} values"
            )
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class TrialEntry:
    trial_id: str
    labels: TrialLabels
    signals: dict[str, str]              # modality -> relative CSV path
    landmarks: str | None = None
    face_dir: str | None = None


@dataclass(frozen=True)
class SubjectEntry:
    subject_id: str
    trials: tuple[TrialEntry, ...]


@dataclass(frozen=True)
class DatasetManifest:
    dataset_id: str
    root: Path
    subjects: tuple[SubjectEntry, ...]
    rating_scale: tuple[float, float]
    sampling_rates: dict[str, float]
    channel_names: dict[str, tuple[str, ...]]
    scalp_layout_ref: str
    notes: str = ""
    eeg_raw: bool = False

    @property
    def scale_midpoint(self):
        return (self.rating_scale[0] + self.rating_scale[1]) / 2.0

    def subject(self, subject_id):
        for s in self.subjects:
            if s.subject_id == subject_id:
                return s
        raise SpecError(f"unknown subject {subject_id!r}")

    def trials(self):
        """Yield (subject_id, TrialEntry) in manifest order."""
        for s in self.subjects:
            for t in s.trials:
                yield s.subject_id, t


def binarize(rating, midpoint):
    """High iff rating > midpoint; ties classify Low."""
    if not np.isfinite(rating):
        raise SpecError(f"rating must be finite, got {rating}")
    return HIGH if rating > midpoint else LOW


def emotion_class(valence, arousal):
    """Map a (valence, arousal) label pair onto the four quadrant classes."""
    table = {
        (HIGH, HIGH): "HVHA",
        (LOW, HIGH): "LVHA",
        (LOW, LOW): "LVLA",
        (HIGH, LOW): "HVLA",
    }
    try:
        return table[(valence, arousal)]
    except KeyError:
        raise SpecError(f"labels must be Low/High, got {(valence, arousal)!r}") from None


def load_manifest(path) -> DatasetManifest:
    """Load and fully validate a dataset manifest.

    Every referenced signal/landmark file must exist; subject ids must be
    unique; every rating must sit inside the declared scale.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SpecError(f"manifest parse error in {path}: {e}") from e
    root = path.parent

    try:
        scale = (float(raw["rating_scale"]["min"]), float(raw["rating_scale"]["max"]))
        dataset_id = str(raw["dataset_id"])
        sampling = {str(k): float(v) for k, v in raw["sampling_rates"].items()}
        layout_ref = str(raw["scalp_layout_ref"])
        subjects_raw = raw["subjects"]
    except KeyError as e:
        raise SpecError(f"manifest {path}: missing field {e}") from e
    if scale[0] >= scale[1]:
        raise SpecError(f"manifest {path}: rating min must be < max")
    channel_names = {
        str(k): tuple(str(c) for c in v)
        for k, v in raw.get("channel_names", {}).items()
    }
    midpoint = (scale[0] + scale[1]) / 2.0

    subjects = []
    seen = set()
    for s in subjects_raw:
        sid = str(s["subject_id"])
        if sid in seen:
            raise SpecError(f"manifest {path}: duplicate subject id {sid!r}")
        seen.add(sid)
        trials = []
        for t in s["trials"]:
            ratings = t["labels"]
            for key in ("valence", "arousal"):
                r = float(ratings[key])
                if not scale[0] <= r <= scale[1]:
                    raise SpecError(
                        f"manifest {path}: trial {t['trial_id']} {key}={r} outside "
                        f"scale {scale}"
                    )
            labels = TrialLabels(
                valence=float(ratings["valence"]),
                arousal=float(ratings["arousal"]),
                liking=float(ratings["liking"]) if "liking" in ratings else None,
                scale_midpoint=midpoint,
            )
            signals = {str(k): str(v) for k, v in t.get("signals", {}).items()}
            for mod, rel in signals.items():
                if mod not in MODALITIES:
                    raise SpecError(f"manifest {path}: unknown modality {mod!r}")
                if not (root / rel).is_file():
                    raise SpecError(f"manifest {path}: missing trial file {rel}")
            landmarks = t.get("landmarks")
            if landmarks is not None and not (root / landmarks).is_file():
                raise SpecError(f"manifest {path}: missing trial file {landmarks}")
            face_dir = t.get("face_dir")
            if face_dir is not None and not (root / face_dir).is_dir():
                raise SpecError(f"manifest {path}: missing face directory {face_dir}")
            trials.append(
                TrialEntry(
                    trial_id=str(t["trial_id"]),
                    labels=labels,
                    signals=signals,
                    landmarks=landmarks,
                    face_dir=face_dir,
                )
            )
        subjects.append(SubjectEntry(subject_id=sid, trials=tuple(trials)))

    return DatasetManifest(
        dataset_id=dataset_id,
        root=root,
        subjects=tuple(subjects),
        rating_scale=scale,
        sampling_rates=sampling,
        channel_names=channel_names,
        scalp_layout_ref=layout_ref,
        notes=str(raw.get("notes", "")),
        eeg_raw=bool(raw.get("eeg_raw", False)),
    )


def read_signal_csv(path, n_channels=None):
    """Read a headerless signal CSV into a [channel x time] float array."""
    arr = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    if not np.all(np.isfinite(arr)):
        raise SpecError(f"{path}: NaN or infinite sample in signal file")
    if n_channels is not None and arr.shape[1] != n_channels:
        raise SpecError(
            f"{path}: expected {n_channels} channels, file has {arr.shape[1]} columns"
        )
    return arr.T.copy()


def write_signal_csv(path, samples):
    """Write [channel x time] samples as rows-are-time CSV (9 significant digits,
    enough to round-trip float32 exactly)."""
    samples = np.asarray(samples, dtype=np.float64)
    np.savetxt(path, samples.T, delimiter=",", fmt="%.9g")


def load_trial_signal(manifest: DatasetManifest, entry: TrialEntry, subject_id,
                      modality) -> TrialRecording:
    """Load one modality of a trial, applying the manifest's declared
    preprocessing (4-45 Hz band-pass for raw EEG)."""
    if modality not in entry.signals:
        raise SpecError(
            f"trial {entry.trial_id} has no {modality} recording"
        )
    channels = manifest.channel_names.get(modality)
    if channels is None:
        raise SpecError(f"manifest lacks channel_names for {modality}")
    fs = manifest.sampling_rates.get(modality)
    if fs is None:
        raise SpecError(f"manifest lacks sampling rate for {modality}")
    samples = read_signal_csv(manifest.root / entry.signals[modality],
                              n_channels=len(channels))
    if modality == "EEG" and manifest.eeg_raw:
        from .dsp import bandpass
        samples = np.vstack([bandpass(ch, fs, 4.0, 45.0) for ch in samples])
    return TrialRecording(
        trial_id=entry.trial_id,
        subject_id=subject_id,
        modality=modality,
        channels=tuple(channels),
        samples=samples,
        fs=float(fs),
    )


_LM_HEADER = (
    ["t"]
    + [f"x{i}" for i in range(1, N_LANDMARKS + 1)]
    + [f"y{i}" for i in range(1, N_LANDMARKS + 1)]
    + ["bx", "by", "bw", "bh"]
)


def read_landmarks_csv(path, trial_id) -> FaceLandmarkTrack:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != _LM_HEADER:
        raise SpecError(f"{path}: bad landmark header")
    frames = []
    for row in rows[1:]:
        vals = np.asarray(row, dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            raise SpecError(f"{path}: non-finite landmark value")
        xs = vals[1:1 + N_LANDMARKS]
        ys = vals[1 + N_LANDMARKS:1 + 2 * N_LANDMARKS]
        frames.append(
            LandmarkFrame(
                t=float(vals[0]),
                points=np.column_stack([xs, ys]),
                face_box=tuple(vals[1 + 2 * N_LANDMARKS:]),
            )
        )
    return FaceLandmarkTrack(trial_id=trial_id, frames=tuple(frames))


def write_landmarks_csv(path, track: FaceLandmarkTrack):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(_LM_HEADER)
        for fr in track.frames:
            row = [f"{fr.t:.6g}"]
            row += [f"{v:.6g}" for v in fr.points[:, 0]]
            row += [f"{v:.6g}" for v in fr.points[:, 1]]
            row += [f"{v:.6g}" for v in fr.face_box]
            w.writerow(row)
