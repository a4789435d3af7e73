"""Evaluation protocols: LOSO, resampled splits, cross-dataset transfer."""

import json

import numpy as np
import pytest

from affectlab.data import load_manifest
from affectlab.harness.experiments import (
    ExperimentSpec,
    format_report,
    run_loso,
    run_split,
    run_transfer,
    spec_from_json,
    spec_to_json,
    ttest_compare,
    write_report,
)
from affectlab.harness.features import TrialFeatures
from affectlab.harness.experiments import _labels
from affectlab.harness.synth import PlantedEffect, SynthConfig, synth_generate
from affectlab.learn import EvalReport
from affectlab.validation import SpecError


def _make(tmp_factory, name, **cfg_kw):
    root = tmp_factory.mktemp(name)
    synth_generate(SynthConfig(dataset_id=name, **cfg_kw), root)
    return load_manifest(root / "manifest.json")


@pytest.fixture(scope="module")
def planted(tmp_path_factory):
    return _make(
        tmp_path_factory, "planted", n_subjects=4, trials_per_subject=8,
        trial_length_s=10.0, montage="14ch", seed=11,
        effects={"valence": PlantedEffect(size=2.0)},
    )


@pytest.fixture(scope="module")
def null_set(tmp_path_factory):
    return _make(
        tmp_path_factory, "nullset", n_subjects=4, trials_per_subject=8,
        trial_length_s=10.0, montage="14ch", seed=12,
    )


@pytest.fixture(scope="module")
def planted_b(tmp_path_factory):
    return _make(
        tmp_path_factory, "plantedb", n_subjects=2, trials_per_subject=8,
        trial_length_s=10.0, montage="14ch", seed=13,
        effects={"valence": PlantedEffect(size=2.0)},
    )


@pytest.fixture(scope="module")
def planted_32(tmp_path_factory):
    return _make(
        tmp_path_factory, "planted32", n_subjects=2, trials_per_subject=8,
        trial_length_s=10.0, montage="32ch", seed=14,
        effects={"valence": PlantedEffect(size=2.0)},
    )


PSD_SPEC = ExperimentSpec(feature_sets=("EEG",), eeg_parts=("psd",),
                          classifier_params={"hidden": 200})


class TestExperimentSpec:
    def test_defaults_valid(self):
        spec = ExperimentSpec()
        assert spec.feature_sets == ("EEG",)
        assert spec.protocol == "loso"

    def test_unknown_feature_set(self):
        with pytest.raises(SpecError, match="unknown feature set"):
            ExperimentSpec(feature_sets=("EKG",))

    def test_duplicate_feature_sets(self):
        with pytest.raises(SpecError, match="duplicate"):
            ExperimentSpec(feature_sets=("EEG", "EEG"))

    def test_empty_feature_sets(self):
        with pytest.raises(SpecError, match="at least one"):
            ExperimentSpec(feature_sets=())

    def test_unknown_target(self):
        with pytest.raises(SpecError, match="unknown target"):
            ExperimentSpec(target="boredom")

    def test_unknown_protocol(self):
        with pytest.raises(SpecError, match="unknown protocol"):
            ExperimentSpec(protocol="k-fold")

    def test_unknown_classifier(self):
        with pytest.raises(SpecError, match="unknown classifier"):
            ExperimentSpec(classifier="svm")

    def test_sequence_set_cannot_mix_with_flat(self):
        with pytest.raises(SpecError, match="cannot be"):
            ExperimentSpec(feature_sets=("EEG", "EEG+Face-LSTM"),
                           classifier="lstm")

    def test_lstm_requires_sequence_set(self):
        with pytest.raises(SpecError, match="require each other"):
            ExperimentSpec(feature_sets=("EEG",), classifier="lstm")

    def test_sequence_set_requires_lstm(self):
        with pytest.raises(SpecError, match="require each other"):
            ExperimentSpec(feature_sets=("EEG+Face-LSTM",), classifier="elm")

    def test_unknown_missing_policy(self):
        with pytest.raises(SpecError, match="policy"):
            ExperimentSpec(missing_policy="impute")

    def test_unknown_eeg_part(self):
        with pytest.raises(SpecError, match="unknown EEG part"):
            ExperimentSpec(eeg_parts=("psd", "gamma"))

    def test_json_round_trip(self):
        spec = ExperimentSpec(feature_sets=("EEG", "GSR"), target="arousal",
                              protocol="split80_20_x10", seed=9,
                              classifier_params={"hidden": 100})
        assert spec_from_json(spec_to_json(spec)) == spec

    def test_json_unknown_key(self):
        with pytest.raises(SpecError, match="unknown experiment config key"):
            spec_from_json('{"foo": 1}')

    def test_json_not_object(self):
        with pytest.raises(SpecError, match="JSON object"):
            spec_from_json("[1, 2]")

    def test_json_invalid(self):
        with pytest.raises(SpecError, match="not valid JSON"):
            spec_from_json("{nope")


class TestLabels:
    def _row(self, labels):
        return TrialFeatures(trial_id="t1", subject_id="s1", labels=labels)

    def test_binarized_target(self):
        rows = [self._row({"valence": 7.0}), self._row({"valence": 3.0})]
        np.testing.assert_array_equal(
            _labels(rows, "valence", 5.0), ["High", "Low"]
        )

    def test_emotion_quadrants(self):
        rows = [self._row({"valence": 7.0, "arousal": 8.0}),
                self._row({"valence": 2.0, "arousal": 1.0})]
        np.testing.assert_array_equal(
            _labels(rows, "emotion", 5.0), ["HVHA", "LVLA"]
        )

    def test_missing_rating_names_trial(self):
        rows = [self._row({"valence": 7.0})]
        with pytest.raises(SpecError, match="t1 has no 'liking'"):
            _labels(rows, "liking", 5.0)


class TestRunLoso:
    def test_planted_effect_decodes(self, planted, provider):
        report = run_loso(planted, PSD_SPEC, provider)
        assert report.accuracy >= 90.0
        assert report.classes == ("High", "Low")
        assert len(report.per_fold) == 4
        assert report.confusion.sum() == 32

    def test_null_dataset_stays_near_chance(self, null_set, provider):
        report = run_loso(null_set, PSD_SPEC, provider)
        assert 25.0 <= report.accuracy <= 75.0

    def test_parallel_jobs_equal_serial(self, planted, provider):
        a = run_loso(planted, PSD_SPEC, provider, n_jobs=1)
        b = run_loso(planted, PSD_SPEC, provider, n_jobs=2)
        assert a.accuracy == b.accuracy
        assert a.per_fold == b.per_fold
        np.testing.assert_array_equal(a.confusion, b.confusion)

    def test_seed_changes_fold_models(self, planted, provider):
        # different experiment seed reseeds every fold classifier
        a = run_loso(planted, PSD_SPEC, provider)
        b = run_loso(
            planted,
            ExperimentSpec(feature_sets=("EEG",), eeg_parts=("psd",),
                           classifier_params={"hidden": 200}, seed=123),
            provider,
        )
        assert a.classes == b.classes    # both runs evaluate, seeds may tie

    def test_wrong_protocol_rejected(self, planted, provider):
        spec = ExperimentSpec(protocol="split80_20_x10")
        with pytest.raises(SpecError, match="run_loso cannot"):
            run_loso(planted, spec, provider)

    def test_needs_two_subjects(self, tmp_path, provider):
        root = tmp_path / "one"
        synth_generate(
            SynthConfig(n_subjects=1, trials_per_subject=4, seed=1,
                        dataset_id="one"), root)
        man = load_manifest(root / "manifest.json")
        with pytest.raises(SpecError, match="2 subjects"):
            run_loso(man, PSD_SPEC, provider)


class TestSequenceProtocol:
    def test_lstm_over_per_second_sequences(self, planted_b, provider):
        # small net and short training keep the slowest path affordable
        spec = ExperimentSpec(
            feature_sets=("EEG+Face-LSTM",), classifier="lstm",
            classifier_params={"layers": [16, 8], "epochs": 30,
                               "patience": 10},
        )
        report = run_loso(planted_b, spec, provider)
        assert report.confusion.sum() == 16
        assert report.classes == ("High", "Low")
        assert len(report.per_fold) == 2


class TestRunSplit:
    SPEC = ExperimentSpec(feature_sets=("EEG",), eeg_parts=("psd",),
                          protocol="split80_20_x10",
                          classifier_params={"hidden": 200})

    def test_ten_resamples_pooled(self, planted, provider):
        report = run_split(planted, self.SPEC, provider)
        assert len(report.per_fold) == 10
        assert report.accuracy == pytest.approx(np.mean(report.per_fold))
        # 32 trials -> 6 test trials per resample
        assert report.confusion.sum() == 60
        assert any("accuracy std over 10 resamples" in n for n in report.notes)

    def test_deterministic(self, planted, provider):
        a = run_split(planted, self.SPEC, provider)
        b = run_split(planted, self.SPEC, provider, n_jobs=2)
        assert a.accuracy == b.accuracy
        assert a.per_fold == b.per_fold

    def test_planted_effect_decodes(self, planted, provider):
        report = run_split(planted, self.SPEC, provider)
        assert report.accuracy >= 85.0

    def test_combined_datasets_pool(self, planted, planted_b, provider):
        spec = ExperimentSpec(feature_sets=("EEG",), eeg_parts=("psd",),
                              protocol="combined",
                              classifier_params={"hidden": 200})
        report = run_split([planted, planted_b], spec, provider)
        # 48 pooled trials -> 10 test trials per resample
        assert report.confusion.sum() == 100
        assert report.accuracy >= 85.0

    def test_wrong_protocol_rejected(self, planted, provider):
        with pytest.raises(SpecError, match="run_split cannot"):
            run_split(planted, PSD_SPEC, provider)


class TestRunTransfer:
    def test_deep_features_cross_montage(self, planted_32, planted_b, provider):
        spec = ExperimentSpec(feature_sets=("EEG",), eeg_parts=("deep",),
                              protocol="transfer",
                              classifier_params={"hidden": 200})
        report = run_transfer(planted_32, planted_b, spec, provider)
        assert report.confusion.sum() == 16
        assert report.accuracy >= 75.0

    def test_psd_features_reject_cross_montage(self, planted_32, planted_b,
                                               provider):
        spec = ExperimentSpec(feature_sets=("EEG",), eeg_parts=("psd",),
                              protocol="transfer")
        with pytest.raises(SpecError, match="feature-set mismatch: EEG"):
            run_transfer(planted_32, planted_b, spec, provider)

    def test_same_montage_psd_transfers(self, planted, planted_b, provider):
        spec = ExperimentSpec(feature_sets=("EEG",), eeg_parts=("psd",),
                              protocol="transfer",
                              classifier_params={"hidden": 200})
        report = run_transfer(planted, planted_b, spec, provider)
        assert report.accuracy >= 75.0

    def test_train_test_must_be_disjoint(self, planted, provider):
        spec = ExperimentSpec(protocol="transfer")
        with pytest.raises(SpecError, match="disjoint"):
            run_transfer(planted, planted, spec, provider)

    def test_wrong_protocol_rejected(self, planted, planted_b, provider):
        with pytest.raises(SpecError, match="run_transfer cannot"):
            run_transfer(planted, planted_b, PSD_SPEC, provider)


def _report(per_fold):
    arr = np.asarray(per_fold, dtype=np.float64)
    return EvalReport(accuracy=float(arr.mean()), macro_f1=0.5,
                      confusion=np.array([[1, 0], [0, 1]]),
                      classes=("High", "Low"), per_fold=tuple(per_fold))


class TestTtestCompare:
    def test_identical_reports_not_significant(self):
        t, p = ttest_compare(_report([60.0, 62.0, 58.0, 61.0]),
                             _report([60.0, 62.0, 58.0, 61.0]))
        assert t == pytest.approx(0.0)
        assert p == pytest.approx(1.0)

    def test_separated_means_significant(self):
        t, p = ttest_compare(_report([90.0, 91.0, 89.0, 92.0]),
                             _report([50.0, 51.0, 49.0, 52.0]))
        assert p < 0.001

    def test_needs_two_folds_each(self):
        with pytest.raises(SpecError, match="at least 2"):
            ttest_compare(_report([60.0]), _report([50.0, 55.0]))


class TestReports:
    def test_format_contains_table(self):
        rep = _report([75.0, 85.0])
        text = format_report(rep)
        assert "accuracy" in text and "80.00%" in text
        assert "confusion (rows = truth):" in text
        assert "pred High" in text and "true Low" in text
        assert "per-fold accuracy: 75.0, 85.0" in text

    def test_notes_rendered_one_per_line(self):
        rep = EvalReport(accuracy=50.0, macro_f1=0.5,
                         confusion=np.array([[1, 0], [0, 1]]),
                         classes=("a", "b"), notes=("first", "second"))
        text = format_report(rep)
        assert "note: first\nnote: second" in text

    def test_write_report_files(self, tmp_path):
        rep = _report([75.0, 85.0])
        paths = write_report(rep, tmp_path, name="exp1")
        doc = json.loads(paths["json"].read_text())
        assert doc["accuracy"] == 80.0
        assert doc["classes"] == ["High", "Low"]
        assert paths["table"].read_text().startswith("accuracy")
        csv_lines = paths["confusion"].read_text().splitlines()
        assert csv_lines[0] == "truth,pred_High,pred_Low"
        assert csv_lines[1] == "true_High,1,0"
