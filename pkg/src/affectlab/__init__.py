"""Multi-modal bio-sensing feature extraction and affective-state
classification.

Subpackages follow the pipeline: data ingestion, signal and image
transforms (dsp, infotheory, imaging, layouts), per-modality features
(eeg, cardiac, gsr, face), image embeddings, learned models (learn), and
the evaluation harness with its synthetic data generator (harness).
"""

__version__ = "0.1.0"

from .data import (DatasetManifest, FaceLandmarkTrack, FeatureBlock,
                   LandmarkFrame, TrialRecording, binarize, emotion_class,
                   load_manifest, load_trial_signal)
from .validation import SpecError

__all__ = [
    "DatasetManifest",
    "FaceLandmarkTrack",
    "FeatureBlock",
    "LandmarkFrame",
    "SpecError",
    "TrialRecording",
    "binarize",
    "emotion_class",
    "load_manifest",
    "load_trial_signal",
    "__version__",
]
