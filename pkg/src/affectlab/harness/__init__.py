"""Feature fusion, evaluation protocols, and the synthetic dataset generator."""

from .experiments import (ExperimentSpec, format_report, run_loso, run_split,
                          run_transfer, spec_from_json, spec_to_json,
                          ttest_compare, write_report)
from .features import (DEEP_DIM_CAP, EEG_PARTS, FEATURE_SETS,
                       SEQUENCE_DIM_CAP, FeatureExtractor, TrialFeatures,
                       extract_dataset, fuse)
from .synth import (BAND_TONES, PlantedEffect, SynthConfig,
                    synth_config_from_json, synth_generate)

__all__ = [
    "BAND_TONES",
    "DEEP_DIM_CAP",
    "EEG_PARTS",
    "ExperimentSpec",
    "FEATURE_SETS",
    "FeatureExtractor",
    "PlantedEffect",
    "SEQUENCE_DIM_CAP",
    "SynthConfig",
    "TrialFeatures",
    "extract_dataset",
    "format_report",
    "fuse",
    "run_loso",
    "run_split",
    "run_transfer",
    "spec_from_json",
    "spec_to_json",
    "synth_config_from_json",
    "synth_generate",
    "ttest_compare",
    "write_report",
]
