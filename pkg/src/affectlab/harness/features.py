"""Per-trial feature assembly for the experiment harness.

A trial's features split into three kinds:

* fixed vectors, identical no matter how the experiment is split
  (band PSD, entropy pairs, HRV, GSR statistics, geometry aggregates);
* raw embeddings (4096 per image, 12288 for aggregated face stats) that
  an experiment later projects with a PCA fitted on its training side
  only, never here;
* for the sequence family, a per-second feature matrix whose projection
  is likewise deferred.

Keeping projections out of this module is what makes train/test purity
checkable: everything computed here depends only on the trial itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..cardiac import cardiac_spectrogram_image, heart_rate, pnn50, rr_intervals
from ..data import (DatasetManifest, FeatureBlock, TrialEntry, TrialRecording,
                    load_trial_signal, read_landmarks_csv)
from ..dsp import EEG_BANDS
from ..eeg import (band_psd_features, pairwise_entropy_features,
                   per_second_eeg_images, trial_topo_rgb)
from ..embedding import EMBED_SIZE
from ..face import (GEOMETRY_NAMES, aggregate_track, face_geometry_features,
                    frame_geometry)
from ..gsr import gsr_spectrogram_image, gsr_stat_features
from ..imaging import read_png, resize_rgb
from ..infotheory import DEFAULT_MI_CONFIG
from ..layouts import load_layout
from ..validation import SpecError

FEATURE_SETS = ("EEG", "Cardiac", "GSR", "Face1", "Face2", "EEG+Face-LSTM")
EEG_PARTS = ("psd", "entropy", "deep")
DEEP_DIM_CAP = 30
SEQUENCE_DIM_CAP = 60


@dataclass
class TrialFeatures:
    """Everything the harness knows about one trial before any fold split."""

    trial_id: str
    subject_id: str
    labels: dict = field(default_factory=dict)     # target -> rating
    fixed: dict = field(default_factory=dict)      # family -> FeatureBlock
    embeds: dict = field(default_factory=dict)     # family -> raw vector
    sequence: np.ndarray | None = None             # [T x raw dim], LSTM family


def fuse(blocks):
    """Concatenate blocks of one trial, preserving order and names."""
    blocks = list(blocks)
    if not blocks:
        raise SpecError("nothing to fuse")
    trial_id = blocks[0].trial_id
    for b in blocks[1:]:
        if b.trial_id != trial_id:
            raise SpecError(
                f"cannot fuse blocks from different trials: "
                f"{trial_id!r} vs {b.trial_id!r}"
            )
    return FeatureBlock(
        trial_id=trial_id,
        modality="+".join(dict.fromkeys(b.modality for b in blocks)),
        method="+".join(b.method for b in blocks),
        names=tuple(n for b in blocks for n in b.names),
        values=np.concatenate([b.values for b in blocks]),
    )


def _cardiac_recording(manifest, entry, subject_id):
    for modality in ("ECG", "PPG"):
        if modality in entry.signals:
            return load_trial_signal(manifest, entry, subject_id, modality)
    return None


def _per_second_face(track, n_seconds):
    """Mean geometry vector per whole second; seconds without frames are 0."""
    out = np.zeros((n_seconds, len(GEOMETRY_NAMES)))
    for s in range(n_seconds):
        rows = [frame_geometry(f.points, f.face_box)
                for f in track.frames if s <= f.t < s + 1]
        if rows:
            out[s] = np.mean(rows, axis=0)
    return out


class FeatureExtractor:
    """Computes TrialFeatures for the families an experiment asks for."""

    def __init__(self, manifest: DatasetManifest, provider,
                 mi_config=DEFAULT_MI_CONFIG, eeg_parts=EEG_PARTS):
        self.manifest = manifest
        self.provider = provider
        self.mi_config = mi_config
        self.eeg_parts = tuple(eeg_parts)
        for p in self.eeg_parts:
            if p not in EEG_PARTS:
                raise SpecError(f"unknown EEG feature part {p!r}")
        if not self.eeg_parts:
            raise SpecError("at least one EEG feature part is required")
        self._layout = None

    @property
    def layout(self):
        if self._layout is None:
            self._layout = load_layout(self.manifest.scalp_layout_ref)
        return self._layout

    def missing(self, entry: TrialEntry, families):
        """Reasons the trial cannot serve each requested family (dict)."""
        gaps = {}
        for fam in families:
            if fam == "EEG" and "EEG" not in entry.signals:
                gaps[fam] = "no EEG recording"
            elif fam == "Cardiac" and not (
                    "ECG" in entry.signals or "PPG" in entry.signals):
                gaps[fam] = "no ECG or PPG recording"
            elif fam == "GSR" and "GSR" not in entry.signals:
                gaps[fam] = "no GSR recording"
            elif fam == "Face1" and entry.landmarks is None:
                gaps[fam] = "no landmark track"
            elif fam == "Face2" and entry.face_dir is None:
                gaps[fam] = "no face crops"
            elif fam == "EEG+Face-LSTM":
                if "EEG" not in entry.signals:
                    gaps[fam] = "no EEG recording"
                elif entry.landmarks is None:
                    gaps[fam] = "no landmark track"
        return gaps

    def extract(self, subject_id, entry: TrialEntry, families) -> TrialFeatures:
        for fam in families:
            if fam not in FEATURE_SETS:
                raise SpecError(f"unknown feature set {fam!r}")
        gaps = self.missing(entry, families)
        if gaps:
            fam, why = next(iter(gaps.items()))
            raise SpecError(f"trial {entry.trial_id}: {fam} unusable: {why}")
        labels = {"valence": entry.labels.valence,
                  "arousal": entry.labels.arousal}
        if entry.labels.liking is not None:
            labels["liking"] = entry.labels.liking
        feats = TrialFeatures(trial_id=entry.trial_id, subject_id=subject_id,
                              labels=labels)
        for fam in families:
            getattr(self, f"_extract_{fam.replace('+', '_').replace('-', '_')}")(
                entry, subject_id, feats)
        return feats

    def _embed(self, image, trial_id):
        try:
            return self.provider.embed(image)
        except Exception as e:
            raise SpecError(f"embedding failed for trial {trial_id}: {e}") from e

    def _extract_EEG(self, entry, subject_id, feats):
        trial = load_trial_signal(self.manifest, entry, subject_id, "EEG")
        parts = []
        if "psd" in self.eeg_parts:
            parts.append(band_psd_features(trial, layout=self.layout))
        if "entropy" in self.eeg_parts:
            parts.append(pairwise_entropy_features(trial, self.mi_config))
        if parts:
            feats.fixed["EEG"] = fuse(parts)
        if "deep" in self.eeg_parts:
            rgb = resize_rgb(trial_topo_rgb(trial, self.layout))
            feats.embeds["EEG"] = self._embed(rgb, entry.trial_id)

    def _extract_Cardiac(self, entry, subject_id, feats):
        trial = _cardiac_recording(self.manifest, entry, subject_id)
        names, values = [], []
        for ch in range(trial.n_channels):
            label = trial.channels[ch]
            names += [f"hr_{label}", f"pnn50_{label}"]
            values += [heart_rate(trial, ch), pnn50(rr_intervals(trial, ch))]
        feats.fixed["Cardiac"] = FeatureBlock(
            trial_id=entry.trial_id, modality=trial.modality, method="cardiac_hrv",
            names=tuple(names), values=np.asarray(values),
        )
        feats.embeds["Cardiac"] = self._embed(
            cardiac_spectrogram_image(trial), entry.trial_id)

    def _extract_GSR(self, entry, subject_id, feats):
        trial = load_trial_signal(self.manifest, entry, subject_id, "GSR")
        feats.fixed["GSR"] = gsr_stat_features(trial)
        feats.embeds["GSR"] = self._embed(
            gsr_spectrogram_image(trial), entry.trial_id)

    def _load_track(self, entry):
        return read_landmarks_csv(
            self.manifest.root / entry.landmarks, entry.trial_id)

    def _extract_Face1(self, entry, subject_id, feats):
        feats.fixed["Face1"] = face_geometry_features(self._load_track(entry))

    def _extract_Face2(self, entry, subject_id, feats):
        crop_dir = self.manifest.root / entry.face_dir
        paths = sorted(crop_dir.glob("*.png"))
        if not paths:
            raise SpecError(
                f"trial {entry.trial_id}: face directory holds no PNG frames"
            )
        embedded = []
        for k, p in enumerate(paths):
            img = resize_rgb(read_png(p))
            try:
                embedded.append(self.provider.embed(img))
            except Exception as e:
                raise SpecError(
                    f"embedding failed for trial {entry.trial_id}, frame {k}: {e}"
                ) from e
        feats.embeds["Face2"] = aggregate_track(embedded)

    def _extract_EEG_Face_LSTM(self, entry, subject_id, feats):
        trial = load_trial_signal(self.manifest, entry, subject_id, "EEG")
        track = self._load_track(entry)
        images = per_second_eeg_images(trial, self.layout)
        n_seconds = len(images)
        rows = []
        spf = int(round(trial.fs))
        for s, img in enumerate(images):
            emb = self._embed(resize_rgb(img), f"{entry.trial_id}[{s}]")
            chunk = trial.samples[:, s * spf:(s + 1) * spf]
            second = TrialRecording(
                trial_id=f"{entry.trial_id}[{s}]", subject_id=subject_id,
                modality="EEG", channels=trial.channels,
                samples=chunk, fs=trial.fs,
            )
            ent = pairwise_entropy_features(second, self.mi_config)
            rows.append(np.concatenate([emb, ent.values]))
        face = _per_second_face(track, n_seconds)
        feats.sequence = np.hstack([np.asarray(rows), face])


def extract_dataset(extractor: FeatureExtractor, families, policy="drop-trial"):
    """TrialFeatures for every usable trial plus (trial, reason) skip list.

    policy "drop-trial" skips trials missing any requested family;
    "drop-experiment" raises on the first gap instead.
    """
    if policy not in ("drop-trial", "drop-experiment"):
        raise SpecError(f"unknown missing-data policy {policy!r}")
    rows, skipped = [], []
    for subject_id, entry in extractor.manifest.trials():
        gaps = extractor.missing(entry, families)
        if gaps:
            fam, why = next(iter(gaps.items()))
            if policy == "drop-experiment":
                raise SpecError(
                    f"trial {entry.trial_id}: {fam} unusable: {why}"
                )
            skipped.append((entry.trial_id, f"{fam}: {why}"))
            continue
        rows.append(extractor.extract(subject_id, entry, families))
    return rows, skipped
