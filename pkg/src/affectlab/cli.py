"""Command-line entry point.

Subcommands: extract (feature store with content-addressed caching),
render (topo and spectrogram PNGs), evaluate (runs an experiment config),
synth (synthetic dataset generation), embed-stub-serve (answers exchange
jobs with the stub embedder, for debugging the sidecar protocol).

Experiments and synthetic datasets are described by JSON config files;
flags cover only paths, seeds, parallelism, and verbosity, so a config
plus the provenance record pins a run completely.  Spec violations exit
with status 2 and a one-line diagnostic.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .cardiac import cardiac_spectrogram_image
from .data import load_manifest, load_trial_signal
from .eeg import per_second_eeg_images, trial_topo_rgb
from .embedding import SidecarEmbeddingProvider, StubEmbeddingProvider, \
    serve_stub
from .gsr import gsr_spectrogram_image
from .harness import FeatureExtractor, spec_from_json, spec_to_json, \
    synth_config_from_json, synth_generate
from .harness.experiments import format_report, run_loso, run_split, \
    run_transfer, write_report
from .harness.features import EEG_PARTS, FEATURE_SETS, _cardiac_recording
from .imaging import write_png
from .infotheory import DEFAULT_MI_CONFIG
from .layouts import load_layout
from .validation import SpecError

STORE_FORMAT = 1
RENDER_KINDS = ("topo", "cardiac", "gsr")


# ---------------------------------------------------------------------------
# shared plumbing


def _parse_provider(text):
    """'stub', 'stub:SEED', or 'sidecar:EXCHANGE_ROOT'."""
    if text == "stub":
        text = "stub:0"
    kind, _, arg = text.partition(":")
    if kind == "stub":
        try:
            seed = int(arg)
        except ValueError:
            raise SpecError(f"stub provider seed must be an integer, got {arg!r}")
        return StubEmbeddingProvider(seed=seed), f"stub:{seed}"
    if kind == "sidecar":
        if not arg:
            raise SpecError("sidecar provider needs an exchange root: sidecar:PATH")
        return SidecarEmbeddingProvider(arg), "sidecar"
    raise SpecError(f"unknown provider {text!r}")


def _config_hash(parts):
    blob = json.dumps(parts, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _write_provenance(out_dir, command, config_parts, seed):
    doc = {
        "command": command,
        "config_sha256": _config_hash(config_parts),
        "seed": seed,
        "versions": {
            "affectlab": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "provenance.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _family_config(family, eeg_parts, provider_key):
    """The inputs that determine a family's values, for cache keying."""
    cfg = {"family": family, "store_format": STORE_FORMAT}
    mi = asdict(DEFAULT_MI_CONFIG)
    if family == "EEG":
        cfg["eeg_parts"] = sorted(eeg_parts)
        if "entropy" in eeg_parts:
            cfg["mi"] = mi
        if "deep" in eeg_parts:
            cfg["provider"] = provider_key
    elif family in ("Cardiac", "GSR", "Face2"):
        cfg["provider"] = provider_key
    elif family == "EEG+Face-LSTM":
        cfg["mi"] = mi
        cfg["provider"] = provider_key
    # Face1 is pure geometry: nothing configurable
    return cfg


# ---------------------------------------------------------------------------
# extract


def _store_path(store, dataset_id, family, trial_id, config):
    digest = _config_hash(config)[:12]
    safe = family.replace("+", "_").replace("-", "_")
    return Path(store) / dataset_id / safe / f"{trial_id}-{digest}.npz"


def write_feature_file(path, feats, family):
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {"format": np.array([STORE_FORMAT])}
    block = feats.fixed.get(family)
    if block is not None:
        arrays["fixed"] = block.values
        arrays["fixed_names"] = np.array(block.names)
        arrays["fixed_meta"] = np.array([block.modality, block.method])
    if family in feats.embeds:
        arrays["embed"] = feats.embeds[family]
    if feats.sequence is not None:
        arrays["sequence"] = feats.sequence
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as f:
        np.savez_compressed(f, **arrays)
    tmp.replace(path)


def read_feature_file(path):
    """Load one cached family file -> dict; None when unreadable or stale."""
    try:
        with np.load(path, allow_pickle=False) as z:
            if "format" not in z or int(z["format"][0]) != STORE_FORMAT:
                return None
            return {k: z[k] for k in z.files}
    except (OSError, ValueError, KeyError):
        return None


def cmd_extract(args):
    manifest = load_manifest(args.manifest)
    provider, provider_key = _parse_provider(args.provider)
    families = _csv(args.features, FEATURE_SETS, "feature set")
    eeg_parts = tuple(_csv(args.eeg_parts, EEG_PARTS, "EEG part"))
    store = Path(os.environ.get("AFFECTLAB_CACHE") or args.out)
    extractor = FeatureExtractor(manifest, provider, eeg_parts=eeg_parts)

    index, skipped = {}, []
    counts = {fam: [0, 0] for fam in families}    # [hits, computed]
    for subject_id, entry in manifest.trials():
        for fam in families:
            gap = extractor.missing(entry, [fam]).get(fam)
            if gap is not None:
                skipped.append({"trial": entry.trial_id, "family": fam,
                                "reason": gap})
                continue
            cfg = _family_config(fam, eeg_parts, provider_key)
            path = _store_path(store, manifest.dataset_id, fam,
                               entry.trial_id, cfg)
            if path.exists():
                if read_feature_file(path) is not None:
                    counts[fam][0] += 1
                    index.setdefault(entry.trial_id, {})[fam] = str(path)
                    continue
                print(f"notice: stale cache entry recomputed: {path}",
                      file=sys.stderr)
            feats = extractor.extract(subject_id, entry, [fam])
            write_feature_file(path, feats, fam)
            counts[fam][1] += 1
            index.setdefault(entry.trial_id, {})[fam] = str(path)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "features_index.json").write_text(json.dumps(
        {"dataset_id": manifest.dataset_id, "trials": index,
         "skipped": skipped}, indent=2, sort_keys=True) + "\n")
    _write_provenance(out, "extract", {
        "manifest": manifest.dataset_id, "features": families,
        "eeg_parts": sorted(eeg_parts), "provider": provider_key,
    }, seed=None)
    for fam in families:
        hits, computed = counts[fam]
        print(f"extract {fam}: hits={hits} computed={computed}")
    if skipped:
        print(f"skipped {len(skipped)} trial/family pairs "
              "(see features_index.json)")
    return 0


# ---------------------------------------------------------------------------
# render


def _csv(text, allowed, what):
    if not text:
        return []
    picked = [p for p in (s.strip() for s in text.split(",")) if p]
    for p in picked:
        if p not in allowed:
            raise SpecError(f"unknown {what} {p!r}; expected one of {allowed}")
    return picked


def cmd_render(args):
    manifest = load_manifest(args.manifest)
    kinds = _csv(args.kinds, RENDER_KINDS, "render kind")
    wanted = set(s.strip() for s in args.trials.split(",") if s.strip()) \
        if args.trials else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    layout = load_layout(manifest.scalp_layout_ref) if "topo" in kinds else None

    written = 0
    for subject_id, entry in manifest.trials():
        if wanted is not None and entry.trial_id not in wanted:
            continue
        if "topo" in kinds:
            trial = load_trial_signal(manifest, entry, subject_id, "EEG")
            if args.per_second:
                for k, img in enumerate(per_second_eeg_images(trial, layout)):
                    write_png(out / f"{entry.trial_id}_topo_s{k:03d}.png", img)
                    written += 1
            else:
                write_png(out / f"{entry.trial_id}_topo.png",
                          trial_topo_rgb(trial, layout))
                written += 1
        if "cardiac" in kinds:
            trial = _cardiac_recording(manifest, entry, subject_id)
            write_png(out / f"{entry.trial_id}_cardiac.png",
                      cardiac_spectrogram_image(trial))
            written += 1
        if "gsr" in kinds:
            trial = load_trial_signal(manifest, entry, subject_id, "GSR")
            write_png(out / f"{entry.trial_id}_gsr.png",
                      gsr_spectrogram_image(trial))
            written += 1
    _write_provenance(out, "render", {
        "manifest": manifest.dataset_id, "kinds": kinds,
        "per_second": bool(args.per_second),
    }, seed=None)
    print(f"rendered {written} images")
    return 0


# ---------------------------------------------------------------------------
# evaluate


def cmd_evaluate(args):
    spec = spec_from_json(Path(args.config).read_text())
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    provider, provider_key = _parse_provider(args.provider)
    manifests = [load_manifest(p) for p in args.manifest]
    if not manifests:
        raise SpecError("evaluate needs at least one --manifest")

    test_manifest = None
    if spec.protocol == "loso":
        if len(manifests) != 1:
            raise SpecError("loso runs on exactly one manifest")
        report = run_loso(manifests[0], spec, provider, n_jobs=args.jobs)
    elif spec.protocol in ("split80_20_x10", "combined"):
        report = run_split(manifests, spec, provider, n_jobs=args.jobs)
    else:
        if args.test_manifest is None:
            raise SpecError("transfer needs --test-manifest")
        test_manifest = load_manifest(args.test_manifest)
        report = run_transfer(manifests, test_manifest, spec, provider)

    name = f"{spec.protocol}_{spec.target}"
    write_report(report, args.out, name)
    _write_provenance(args.out, "evaluate", {
        "spec": json.loads(spec_to_json(spec)),
        "manifests": [m.dataset_id for m in manifests],
        "test_manifest": test_manifest.dataset_id if test_manifest else None,
        "provider": provider_key,
    }, seed=spec.seed)
    print(format_report(report))
    return 0


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args):
    cfg = synth_config_from_json(Path(args.config).read_text())
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    manifest_path = synth_generate(cfg, args.out)
    _write_provenance(args.out, "synth", {
        "config": json.loads(Path(args.config).read_text()),
    }, seed=cfg.seed)
    print(f"wrote {manifest_path}")
    return 0


# ---------------------------------------------------------------------------
# embed-stub-serve


def cmd_embed_stub_serve(args):
    served = serve_stub(args.root, seed=args.seed, max_jobs=args.max_jobs,
                        idle_timeout_s=args.idle_timeout)
    print(f"served {served} jobs")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="affectlab",
        description="Multi-modal bio-sensing feature extraction and "
                    "affective-state classification.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="compute and cache feature blocks")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--features", default="EEG,Cardiac,GSR,Face1",
                   help="comma-separated feature sets")
    p.add_argument("--eeg-parts", default=",".join(EEG_PARTS))
    p.add_argument("--provider", default="stub:0")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("render", help="write topo and spectrogram PNGs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kinds", default="topo",
                   help=f"comma-separated subset of {RENDER_KINDS}")
    p.add_argument("--trials", default=None,
                   help="comma-separated trial ids (default: all)")
    p.add_argument("--per-second", action="store_true",
                   help="one topo image per second instead of one per trial")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("evaluate", help="run an experiment config file")
    p.add_argument("--config", required=True)
    p.add_argument("--manifest", action="append", default=[],
                   help="repeatable; training sets for transfer")
    p.add_argument("--test-manifest", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.add_argument("--provider", default="stub:0")
    p.add_argument("--jobs", type=int, default=-1,
                   help="fold parallelism (-1 = all cores)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("embed-stub-serve",
                       help="answer exchange jobs with stub embeddings")
    p.add_argument("--root", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-jobs", type=int, default=None)
    p.add_argument("--idle-timeout", type=float, default=None)
    p.set_defaults(func=cmd_embed_stub_serve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
