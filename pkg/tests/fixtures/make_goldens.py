"""Regenerate the golden render fixtures.

Run from the repo root after an intentional change to the render pipeline:

    python3 tests/fixtures/make_goldens.py

The goldens pin the full path from synthetic signals to PNG pixels; the
paired tests fail on any unintended drift.
"""

import tempfile
from pathlib import Path

from affectlab.cardiac import cardiac_spectrogram_image
from affectlab.data import load_manifest, load_trial_signal
from affectlab.eeg import trial_topo_rgb
from affectlab.gsr import gsr_spectrogram_image
from affectlab.harness.features import _cardiac_recording
from affectlab.harness.synth import PlantedEffect, SynthConfig, synth_generate
from affectlab.imaging import write_png
from affectlab.layouts import load_layout

GOLDEN_CONFIG = SynthConfig(
    n_subjects=1, trials_per_subject=1, trial_length_s=10.0,
    montage="14ch", seed=42, dataset_id="golden",
    effects={"valence": PlantedEffect(kind="eeg_band", size=2.0)},
)


def golden_images():
    """The three render outputs for the pinned config, as uint8 arrays."""
    with tempfile.TemporaryDirectory() as tmp:
        synth_generate(GOLDEN_CONFIG, tmp)
        manifest = load_manifest(Path(tmp) / "manifest.json")
        entry = manifest.subjects[0].trials[0]
        layout = load_layout(manifest.scalp_layout_ref)
        eeg = load_trial_signal(manifest, entry, "s01", "EEG")
        ppg = _cardiac_recording(manifest, entry, "s01")
        gsr = load_trial_signal(manifest, entry, "s01", "GSR")
        return {
            "topo": trial_topo_rgb(eeg, layout),
            "cardiac": cardiac_spectrogram_image(ppg),
            "gsr": gsr_spectrogram_image(gsr),
        }


def main():
    out = Path(__file__).parent / "golden"
    out.mkdir(exist_ok=True)
    for name, img in golden_images().items():
        write_png(out / f"{name}.png", img)
        print(f"wrote {out / f'{name}.png'}")


if __name__ == "__main__":
    main()
