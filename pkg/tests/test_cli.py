"""CLI subcommands: synth, extract caching, render, evaluate, stub server.

Commands run in-process through main() so the suite stays fast; one
subprocess test confirms the installed console script is wired up.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

import affectlab
from affectlab.cli import main
from affectlab.data import load_manifest
from affectlab.embedding import StubEmbeddingProvider, read_response, write_job


@pytest.fixture(autouse=True)
def _no_cache_env(monkeypatch):
    monkeypatch.delenv("AFFECTLAB_CACHE", raising=False)


SYNTH_CFG = {
    "n_subjects": 2, "trials_per_subject": 2, "trial_length_s": 10.0,
    "montage": "14ch", "seed": 5, "dataset_id": "clidata",
}


def _cfg_file(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli_dataset")
    rc = main(["synth", "--config", _cfg_file(tmp, SYNTH_CFG),
               "--out", str(tmp / "data")])
    assert rc == 0
    return tmp / "data"


class TestSynth:
    def test_writes_manifest_and_provenance(self, dataset, capsys):
        assert (dataset / "manifest.json").exists()
        prov = json.loads((dataset / "provenance.json").read_text())
        assert prov["command"] == "synth"
        assert prov["seed"] == 5
        assert prov["versions"]["affectlab"] == affectlab.__version__

    def test_seed_override_changes_signals(self, dataset, tmp_path):
        rc = main(["synth", "--config", _cfg_file(tmp_path, SYNTH_CFG),
                   "--out", str(tmp_path / "data"), "--seed", "6"])
        assert rc == 0
        name = "signals/s01_t01_eeg.csv"
        assert (tmp_path / "data" / name).read_bytes() != \
            (dataset / name).read_bytes()

    def test_same_config_regenerates_identically(self, dataset, tmp_path):
        main(["synth", "--config", _cfg_file(tmp_path, SYNTH_CFG),
              "--out", str(tmp_path / "data")])
        assert (tmp_path / "data" / "manifest.json").read_bytes() == \
            (dataset / "manifest.json").read_bytes()


def _extract(dataset, out, features="EEG,Cardiac,GSR,Face1",
             eeg_parts="psd", provider="stub:0"):
    return main(["extract", "--manifest", str(dataset / "manifest.json"),
                 "--out", str(out), "--features", features,
                 "--eeg-parts", eeg_parts, "--provider", provider])


class TestExtract:
    def test_first_run_computes_everything(self, dataset, tmp_path, capsys):
        assert _extract(dataset, tmp_path / "out") == 0
        lines = capsys.readouterr().out.splitlines()
        assert "extract EEG: hits=0 computed=4" in lines
        assert "extract Face1: hits=0 computed=4" in lines
        index = json.loads(
            (tmp_path / "out" / "features_index.json").read_text())
        assert index["dataset_id"] == "clidata"
        assert len(index["trials"]) == 4
        assert set(index["trials"]["s01_t01"]) == \
            {"EEG", "Cardiac", "GSR", "Face1"}
        assert index["skipped"] == []

    def test_second_run_hits_the_cache(self, dataset, tmp_path, capsys):
        _extract(dataset, tmp_path / "out")
        capsys.readouterr()
        _extract(dataset, tmp_path / "out")
        out = capsys.readouterr().out
        assert "extract EEG: hits=4 computed=0" in out
        assert "computed=4" not in out

    def test_cache_env_shares_a_store(self, dataset, tmp_path, monkeypatch,
                                      capsys):
        monkeypatch.setenv("AFFECTLAB_CACHE", str(tmp_path / "store"))
        _extract(dataset, tmp_path / "out1", features="Face1")
        capsys.readouterr()
        _extract(dataset, tmp_path / "out2", features="Face1")
        assert "extract Face1: hits=4 computed=0" in capsys.readouterr().out
        # feature files live in the store, not the per-run out dirs
        assert (tmp_path / "store" / "clidata").is_dir()
        assert not (tmp_path / "out2" / "clidata").exists()

    def test_corrupt_cache_entry_recomputed(self, dataset, tmp_path, capsys):
        _extract(dataset, tmp_path / "out", features="Face1")
        victim = next((tmp_path / "out" / "clidata" / "Face1").glob("*.npz"))
        victim.write_bytes(b"not a feature file")
        capsys.readouterr()
        _extract(dataset, tmp_path / "out", features="Face1")
        captured = capsys.readouterr()
        assert "stale cache entry recomputed" in captured.err
        assert "extract Face1: hits=3 computed=1" in captured.out

    def test_provider_change_recomputes_embeds_only(self, dataset, tmp_path,
                                                    capsys):
        _extract(dataset, tmp_path / "out", features="Cardiac,Face1")
        capsys.readouterr()
        _extract(dataset, tmp_path / "out", features="Cardiac,Face1",
                 provider="stub:1")
        out = capsys.readouterr().out
        assert "extract Cardiac: hits=0 computed=4" in out
        assert "extract Face1: hits=4 computed=0" in out

    def test_missing_family_skipped_with_reason(self, dataset, tmp_path,
                                                capsys):
        # the fixture dataset renders no face crops
        assert _extract(dataset, tmp_path / "out", features="Face2") == 0
        captured = capsys.readouterr().out
        assert "extract Face2: hits=0 computed=0" in captured
        assert "skipped 4 trial/family pairs" in captured
        index = json.loads(
            (tmp_path / "out" / "features_index.json").read_text())
        assert index["skipped"][0]["reason"] == "no face crops"

    def test_unknown_feature_set_exits_2(self, dataset, tmp_path, capsys):
        rc = _extract(dataset, tmp_path / "out", features="EEG,Bogus")
        assert rc == 2
        assert "error: unknown feature set 'Bogus'" in capsys.readouterr().err


def _render(dataset, out, *extra):
    return main(["render", "--manifest", str(dataset / "manifest.json"),
                 "--out", str(out), *extra])


class TestRender:
    def test_topo_one_per_trial(self, dataset, tmp_path, capsys):
        assert _render(dataset, tmp_path / "r") == 0
        assert "rendered 4 images" in capsys.readouterr().out
        names = sorted(p.name for p in (tmp_path / "r").glob("*.png"))
        assert names == ["s01_t01_topo.png", "s01_t02_topo.png",
                         "s02_t01_topo.png", "s02_t02_topo.png"]

    def test_all_kinds_for_one_trial(self, dataset, tmp_path, capsys):
        _render(dataset, tmp_path / "r", "--kinds", "topo,cardiac,gsr",
                "--trials", "s01_t02")
        assert "rendered 3 images" in capsys.readouterr().out
        names = sorted(p.name for p in (tmp_path / "r").glob("*.png"))
        assert names == ["s01_t02_cardiac.png", "s01_t02_gsr.png",
                         "s01_t02_topo.png"]

    def test_per_second_naming(self, dataset, tmp_path):
        _render(dataset, tmp_path / "r", "--per-second",
                "--trials", "s01_t01")
        names = sorted(p.name for p in (tmp_path / "r").glob("*.png"))
        assert len(names) == 10
        assert names[0] == "s01_t01_topo_s000.png"
        assert names[-1] == "s01_t01_topo_s009.png"

    def test_empty_kinds_renders_nothing(self, dataset, tmp_path, capsys):
        assert _render(dataset, tmp_path / "r", "--kinds", "") == 0
        assert "rendered 0 images" in capsys.readouterr().out

    def test_unknown_kind_exits_2(self, dataset, tmp_path, capsys):
        rc = _render(dataset, tmp_path / "r", "--kinds", "topo,spiral")
        assert rc == 2
        assert "error: unknown render kind 'spiral'" in capsys.readouterr().err


EVAL_CFG = {"feature_sets": ["EEG"], "eeg_parts": ["psd"],
            "classifier_params": {"hidden": 100}}


def _evaluate(cfg_path, out, *extra):
    return main(["evaluate", "--config", cfg_path, "--out", str(out), *extra])


class TestEvaluate:
    def test_loso_writes_report_files(self, dataset, tmp_path, capsys):
        cfg = _cfg_file(tmp_path, EVAL_CFG)
        rc = _evaluate(cfg, tmp_path / "out",
                       "--manifest", str(dataset / "manifest.json"))
        assert rc == 0
        out = capsys.readouterr().out
        assert "accuracy" in out and "confusion (rows = truth):" in out
        for suffix in ("loso_valence.json", "loso_valence.txt",
                       "loso_valence_confusion.csv", "provenance.json"):
            assert (tmp_path / "out" / suffix).exists()
        doc = json.loads((tmp_path / "out" / "loso_valence.json").read_text())
        assert np.asarray(doc["confusion"]).sum() == 4

    def test_runs_are_deterministic(self, dataset, tmp_path):
        cfg = _cfg_file(tmp_path, EVAL_CFG)
        man = str(dataset / "manifest.json")
        _evaluate(cfg, tmp_path / "a", "--manifest", man)
        _evaluate(cfg, tmp_path / "b", "--manifest", man, "--jobs", "2")
        assert (tmp_path / "a" / "loso_valence.json").read_bytes() == \
            (tmp_path / "b" / "loso_valence.json").read_bytes()

    def test_seed_override_recorded(self, dataset, tmp_path):
        cfg = _cfg_file(tmp_path, EVAL_CFG)
        _evaluate(cfg, tmp_path / "out",
                  "--manifest", str(dataset / "manifest.json"),
                  "--seed", "99")
        prov = json.loads((tmp_path / "out" / "provenance.json").read_text())
        assert prov["seed"] == 99
        assert prov["config_sha256"]

    def test_transfer_montage_mismatch_exits_2(self, dataset, tmp_path,
                                               capsys):
        other = tmp_path / "m32"
        main(["synth", "--config",
              _cfg_file(tmp_path, {**SYNTH_CFG, "montage": "32ch",
                                   "dataset_id": "m32",
                                   "n_subjects": 1}),
              "--out", str(other)])
        cfg = _cfg_file(tmp_path, {**EVAL_CFG, "protocol": "transfer"},
                        "transfer.json")
        capsys.readouterr()
        rc = _evaluate(cfg, tmp_path / "out",
                       "--manifest", str(dataset / "manifest.json"),
                       "--test-manifest", str(other / "manifest.json"))
        assert rc == 2
        assert "error: feature-set mismatch: EEG" in capsys.readouterr().err

    def test_transfer_needs_test_manifest(self, dataset, tmp_path, capsys):
        cfg = _cfg_file(tmp_path, {**EVAL_CFG, "protocol": "transfer"})
        rc = _evaluate(cfg, tmp_path / "out",
                       "--manifest", str(dataset / "manifest.json"))
        assert rc == 2
        assert "error: transfer needs --test-manifest" in \
            capsys.readouterr().err

    def test_bad_config_exits_2(self, dataset, tmp_path, capsys):
        cfg = _cfg_file(tmp_path, {"featur_sets": ["EEG"]})
        rc = _evaluate(cfg, tmp_path / "out",
                       "--manifest", str(dataset / "manifest.json"))
        assert rc == 2
        assert "error: unknown experiment config key" in \
            capsys.readouterr().err


class TestEmbedStubServe:
    def test_serves_a_job_then_exits(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        images = [rng.integers(0, 256, (224, 224, 3), dtype=np.uint8)
                  for _ in range(3)]
        job_id = write_job(tmp_path, images, dim=4096)
        rc = main(["embed-stub-serve", "--root", str(tmp_path),
                   "--seed", "0", "--max-jobs", "1"])
        assert rc == 0
        assert "served 1 jobs" in capsys.readouterr().out
        got = read_response(tmp_path / f"{job_id}.f32",
                            expect_count=3, expect_dim=4096)
        want = StubEmbeddingProvider(seed=0).embed_batch(images)
        np.testing.assert_allclose(got, want, atol=1e-6)


def test_console_script_installed():
    proc = subprocess.run(["affectlab", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == affectlab.__version__
