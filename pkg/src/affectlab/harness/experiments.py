"""Evaluation protocols over extracted features.

Four protocols share one fold recipe: deep blocks get train-only principal
components, flat vectors get a train-only [-1, 1] rescale, and the
classifier trains from a seed derived from the experiment seed plus the
fold index, so every report regenerates exactly.

* run_loso: one fold per subject, predictions pooled across folds.
* run_split: ten seeded 80/20 resamples; mean accuracy, summed confusion.
  Passing several manifests concatenates their trials (combined mode).
* run_transfer: fit on whole training datasets, score a disjoint test
  dataset once.  Only columns that exist identically on every dataset can
  cross; the schema check rejects anything montage-bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from ..data import DatasetManifest, binarize, emotion_class
from ..learn import (ElmClassifier, LstmClassifier, PrincipalComponents,
                     SymmetricMinMaxScaler, evaluate, select_hidden)
from ..learn.metrics import EvalReport, confusion_matrix, macro_f1_from_confusion
from ..validation import SpecError
from .features import (DEEP_DIM_CAP, EEG_PARTS, FEATURE_SETS,
                       SEQUENCE_DIM_CAP, FeatureExtractor, extract_dataset)

TARGETS = ("valence", "arousal", "liking", "emotion")
PROTOCOLS = ("loso", "split80_20_x10", "combined", "transfer")
N_RESAMPLES = 10
TEST_FRACTION = 0.2
_MAX_RETRIES = 10


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one evaluation run."""

    feature_sets: tuple = ("EEG",)
    target: str = "valence"
    protocol: str = "loso"
    classifier: str = "elm"
    classifier_params: dict = field(default_factory=dict)
    seed: int = 0
    missing_policy: str = "drop-trial"
    eeg_parts: tuple = EEG_PARTS

    def __post_init__(self):
        object.__setattr__(self, "feature_sets", tuple(self.feature_sets))
        object.__setattr__(self, "eeg_parts", tuple(self.eeg_parts))
        if not self.feature_sets:
            raise SpecError("experiment needs at least one feature set")
        for fam in self.feature_sets:
            if fam not in FEATURE_SETS:
                raise SpecError(f"unknown feature set {fam!r}")
        if len(set(self.feature_sets)) != len(self.feature_sets):
            raise SpecError("duplicate feature sets in experiment")
        if self.target not in TARGETS:
            raise SpecError(f"unknown target {self.target!r}")
        if self.protocol not in PROTOCOLS:
            raise SpecError(f"unknown protocol {self.protocol!r}")
        if self.classifier not in ("elm", "lstm"):
            raise SpecError(f"unknown classifier {self.classifier!r}")
        sequence = "EEG+Face-LSTM" in self.feature_sets
        if sequence and len(self.feature_sets) > 1:
            raise SpecError(
                "EEG+Face-LSTM is a sequence feature set and cannot be "
                "fused with flat feature sets"
            )
        if sequence != (self.classifier == "lstm"):
            raise SpecError(
                "the lstm classifier and the EEG+Face-LSTM feature set "
                "require each other"
            )
        if self.missing_policy not in ("drop-trial", "drop-experiment"):
            raise SpecError(f"unknown missing-data policy {self.missing_policy!r}")
        for part in self.eeg_parts:
            if part not in EEG_PARTS:
                raise SpecError(f"unknown EEG part {part!r}")


def spec_to_json(spec: ExperimentSpec) -> str:
    doc = {
        "feature_sets": list(spec.feature_sets),
        "target": spec.target,
        "protocol": spec.protocol,
        "classifier": spec.classifier,
        "classifier_params": spec.classifier_params,
        "seed": spec.seed,
        "missing_policy": spec.missing_policy,
        "eeg_parts": list(spec.eeg_parts),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def spec_from_json(text) -> ExperimentSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"experiment config is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SpecError("experiment config must be a JSON object")
    known = {"feature_sets", "target", "protocol", "classifier",
             "classifier_params", "seed", "missing_policy", "eeg_parts"}
    for key in doc:
        if key not in known:
            raise SpecError(f"unknown experiment config key {key!r}")
    return ExperimentSpec(**doc)


# ---------------------------------------------------------------------------
# labels


def _labels(rows, target, midpoint):
    need = ("valence", "arousal") if target == "emotion" else (target,)
    out = []
    for row in rows:
        for name in need:
            if name not in row.labels:
                raise SpecError(
                    f"trial {row.trial_id} has no {name!r} rating, so "
                    f"target {target!r} is unavailable"
                )
        if target == "emotion":
            out.append(emotion_class(
                binarize(row.labels["valence"], midpoint),
                binarize(row.labels["arousal"], midpoint),
            ))
        else:
            out.append(binarize(row.labels[target], midpoint))
    return np.asarray(out, dtype=object)


# ---------------------------------------------------------------------------
# fold recipe


def _fold_seed(spec, fold_idx):
    seq = np.random.SeedSequence(spec.seed, spawn_key=(fold_idx,))
    return int(seq.generate_state(1)[0])


def _flat_design(train_rows, test_rows, spec):
    """Family-ordered design matrices with train-only fitting."""
    tr_parts, te_parts, notes = [], [], []
    for fam in spec.feature_sets:
        if fam in train_rows[0].fixed:
            tr_parts.append(np.vstack([r.fixed[fam].values for r in train_rows]))
            te_parts.append(np.vstack([r.fixed[fam].values for r in test_rows]))
        if fam in train_rows[0].embeds:
            emb_tr = np.vstack([r.embeds[fam] for r in train_rows])
            emb_te = np.vstack([r.embeds[fam] for r in test_rows])
            n, d = emb_tr.shape
            # centering costs one rank, hence the n - 1 cap
            k = min(DEEP_DIM_CAP, n - 1, d)
            if k < 1:
                notes.append(
                    f"{fam}: too few training trials for deep components, "
                    "block dropped")
                continue
            pca = PrincipalComponents(k).fit(emb_tr)
            tr_parts.append(pca.transform(emb_tr))
            te_parts.append(pca.transform(emb_te))
    if not tr_parts:
        raise SpecError("no usable feature columns in this fold")
    x_tr = np.hstack(tr_parts)
    x_te = np.hstack(te_parts)
    scaler = SymmetricMinMaxScaler().fit(x_tr)
    return scaler.transform(x_tr), scaler.transform(x_te), notes


def _sequence_design(train_rows, test_rows, spec):
    seq_tr = [r.sequence for r in train_rows]
    seq_te = [r.sequence for r in test_rows]
    stacked = np.vstack(seq_tr)
    k = min(SEQUENCE_DIM_CAP, stacked.shape[0] - 1, stacked.shape[1])
    if k < 1:
        raise SpecError("too few training seconds for sequence components")
    pca = PrincipalComponents(k).fit(stacked)
    return ([pca.transform(s) for s in seq_tr],
            [pca.transform(s) for s in seq_te], [])


def _fit_predict(train_rows, test_rows, y_tr, spec, seed):
    """Train-only pipeline fit; returns (test predictions, fold notes)."""
    params = dict(spec.classifier_params)
    if spec.classifier == "lstm":
        x_tr, x_te, notes = _sequence_design(train_rows, test_rows, spec)
        clf = LstmClassifier(seed=seed, **params).fit(x_tr, y_tr)
        return clf.predict(x_te), notes
    x_tr, x_te, notes = _flat_design(train_rows, test_rows, spec)
    if params.pop("select_hidden", False):
        hidden = select_hidden(x_tr, y_tr, seed=seed,
                               ridge=params.get("ridge", 1e-3))
        params["hidden"] = hidden
        notes.append(f"hidden units selected on validation split: {hidden}")
    clf = ElmClassifier(seed=seed, **params).fit(x_tr, y_tr)
    return clf.predict(x_te), notes


# ---------------------------------------------------------------------------
# extraction plumbing


def _gather(manifest, spec, provider):
    extractor = FeatureExtractor(manifest, provider, eeg_parts=spec.eeg_parts)
    rows, skipped = extract_dataset(extractor, spec.feature_sets,
                                    policy=spec.missing_policy)
    notes = [f"{manifest.dataset_id}: dropped {tid} ({why})"
             for tid, why in skipped]
    return rows, notes


def _check_schema(groups, spec):
    """Columns must agree across datasets before rows may be pooled."""
    ref_id, ref = None, None
    for dataset_id, rows in groups:
        if not rows:
            continue
        if ref is None:
            ref_id, ref = dataset_id, rows[0]
            continue
        row = rows[0]
        for fam in spec.feature_sets:
            a, b = ref.fixed.get(fam), row.fixed.get(fam)
            if (a is None) != (b is None) or (
                    a is not None and a.names != b.names):
                na = "absent" if a is None else f"{len(a.names)} columns"
                nb = "absent" if b is None else f"{len(b.names)} columns"
                raise SpecError(
                    f"feature-set mismatch: {fam} fixed features differ "
                    f"between {ref_id} ({na}) and {dataset_id} ({nb})"
                )
            ea, eb = ref.embeds.get(fam), row.embeds.get(fam)
            if (ea is None) != (eb is None) or (
                    ea is not None and ea.size != eb.size):
                raise SpecError(
                    f"feature-set mismatch: {fam} embedding width differs "
                    f"between {ref_id} and {dataset_id}"
                )
        sa = None if ref.sequence is None else ref.sequence.shape[1]
        sb = None if row.sequence is None else row.sequence.shape[1]
        if sa != sb:
            raise SpecError(
                f"feature-set mismatch: sequence width differs between "
                f"{ref_id} ({sa}) and {dataset_id} ({sb})"
            )


def _pool(manifests, spec, provider):
    """Extract every manifest, check schemas, concatenate rows and labels."""
    groups, rows, labels, notes = [], [], [], []
    for man in manifests:
        g_rows, g_notes = _gather(man, spec, provider)
        groups.append((man.dataset_id, g_rows))
        notes.extend(g_notes)
        rows.extend(g_rows)
        labels.extend(_labels(g_rows, spec.target, man.scale_midpoint))
    _check_schema(groups, spec)
    return rows, np.asarray(labels, dtype=object), notes


def _expect_protocol(spec, allowed, runner):
    if spec.protocol not in allowed:
        raise SpecError(
            f"{runner} cannot run a {spec.protocol!r} experiment; "
            f"expected one of {allowed}"
        )


# ---------------------------------------------------------------------------
# protocols


def run_loso(manifest: DatasetManifest, spec: ExperimentSpec, provider,
             n_jobs=1) -> EvalReport:
    """One fold per subject, training on all others; pooled predictions."""
    _expect_protocol(spec, ("loso",), "run_loso")
    if len(manifest.subjects) < 2:
        raise SpecError("leave-one-subject-out needs at least 2 subjects")
    rows, notes = _gather(manifest, spec, provider)
    if not rows:
        raise SpecError("no usable trials in the dataset")
    y = _labels(rows, spec.target, manifest.scale_midpoint)
    classes = tuple(sorted(set(y)))

    folds = []
    for si, subject in enumerate(manifest.subjects):
        test_idx = [i for i, r in enumerate(rows)
                    if r.subject_id == subject.subject_id]
        train_idx = [i for i, r in enumerate(rows)
                     if r.subject_id != subject.subject_id]
        if not test_idx:
            notes.append(f"fold {subject.subject_id}: no usable trials, skipped")
            continue
        if len(set(y[train_idx])) < 2:
            notes.append(
                f"fold {subject.subject_id}: training labels single-class, "
                "skipped")
            continue
        folds.append((si, subject.subject_id, train_idx, test_idx))
    if not folds:
        raise SpecError("every fold was skipped; nothing to evaluate")

    def _one(si, sid, train_idx, test_idx):
        preds, fnotes = _fit_predict(
            [rows[i] for i in train_idx], [rows[i] for i in test_idx],
            y[train_idx], spec, _fold_seed(spec, si))
        acc = 100.0 * np.mean(preds == y[test_idx])
        return preds, y[test_idx], acc, [f"fold {sid}: {n}" for n in fnotes]

    results = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_one)(*fold) for fold in folds)
    pooled_p = np.concatenate([r[0] for r in results])
    pooled_t = np.concatenate([r[1] for r in results])
    per_fold = tuple(float(r[2]) for r in results)
    for r in results:
        notes.extend(r[3])
    return evaluate(pooled_p, pooled_t, classes, per_fold=per_fold, notes=notes)


def run_split(manifests, spec: ExperimentSpec, provider, n_jobs=1) -> EvalReport:
    """Ten seeded 80/20 resamples; accuracy and F1 averaged over resamples.

    A list of manifests pools their trials first, which is the combined-
    dataset mode; thresholds stay per-dataset so mixed rating scales keep
    their own midpoints.
    """
    _expect_protocol(spec, ("split80_20_x10", "combined"), "run_split")
    if isinstance(manifests, DatasetManifest):
        manifests = [manifests]
    rows, y, notes = _pool(manifests, spec, provider)
    n = len(rows)
    if n < 2:
        raise SpecError(f"80/20 resampling needs at least 2 trials, got {n}")
    classes = tuple(sorted(set(y)))
    n_test = max(1, int(round(TEST_FRACTION * n)))
    if n_test >= n:
        raise SpecError(f"test split would swallow all {n} trials")

    def _one(rep):
        for attempt in range(_MAX_RETRIES):
            rng = np.random.default_rng(
                np.random.SeedSequence(spec.seed, spawn_key=(rep, attempt)))
            perm = rng.permutation(n)
            test_idx, train_idx = perm[:n_test], perm[n_test:]
            if set(y[train_idx]) == set(classes):
                break
        else:
            raise SpecError(
                f"resample {rep}: no training split held every class "
                f"after {_MAX_RETRIES} retries"
            )
        preds, fnotes = _fit_predict(
            [rows[i] for i in train_idx], [rows[i] for i in test_idx],
            y[train_idx], spec, _fold_seed(spec, rep))
        mat = confusion_matrix(preds, y[test_idx], classes)
        acc = 100.0 * np.trace(mat) / mat.sum()
        return acc, macro_f1_from_confusion(mat), mat, \
            [f"resample {rep}: {m}" for m in fnotes]

    results = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_one)(rep) for rep in range(N_RESAMPLES))
    accs = np.array([r[0] for r in results])
    f1s = np.array([r[1] for r in results])
    confusion = np.sum([r[2] for r in results], axis=0)
    for r in results:
        notes.extend(r[3])
    notes.append(f"accuracy std over {N_RESAMPLES} resamples: {accs.std():.4f}")
    return EvalReport(
        accuracy=float(accs.mean()),
        macro_f1=float(f1s.mean()),
        confusion=confusion,
        classes=classes,
        per_fold=tuple(float(a) for a in accs),
        notes=tuple(notes),
    )


def run_transfer(train_manifests, test_manifest: DatasetManifest,
                 spec: ExperimentSpec, provider) -> EvalReport:
    """Fit on whole datasets, score a disjoint dataset once."""
    _expect_protocol(spec, ("transfer",), "run_transfer")
    if isinstance(train_manifests, DatasetManifest):
        train_manifests = [train_manifests]
    train_ids = [m.dataset_id for m in train_manifests]
    if test_manifest.dataset_id in train_ids:
        raise SpecError(
            f"transfer train and test sets must be disjoint; "
            f"{test_manifest.dataset_id!r} appears in both"
        )

    groups, train_rows, y_tr, notes = [], [], [], []
    for man in train_manifests:
        g_rows, g_notes = _gather(man, spec, provider)
        groups.append((man.dataset_id, g_rows))
        notes.extend(g_notes)
        train_rows.extend(g_rows)
        y_tr.extend(_labels(g_rows, spec.target, man.scale_midpoint))
    test_rows, t_notes = _gather(test_manifest, spec, provider)
    groups.append((test_manifest.dataset_id, test_rows))
    notes.extend(t_notes)
    _check_schema(groups, spec)

    if len(train_rows) < 2:
        raise SpecError("transfer needs at least 2 training trials")
    if not test_rows:
        raise SpecError("no usable trials in the test dataset")
    y_tr = np.asarray(y_tr, dtype=object)
    y_te = _labels(test_rows, spec.target, test_manifest.scale_midpoint)
    classes = tuple(sorted(set(y_tr) | set(y_te)))
    preds, fnotes = _fit_predict(train_rows, test_rows, y_tr, spec,
                                 _fold_seed(spec, 0))
    notes.extend(fnotes)
    return evaluate(preds, y_te, classes, per_fold=(), notes=notes)


# ---------------------------------------------------------------------------
# reporting


def ttest_compare(report_a: EvalReport, report_b: EvalReport):
    """Unequal-variance two-sample t-test on per-fold accuracies -> (t, p)."""
    a = np.asarray(report_a.per_fold, dtype=np.float64)
    b = np.asarray(report_b.per_fold, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise SpecError("t-test needs at least 2 per-fold accuracies per report")
    result = stats.ttest_ind(a, b, equal_var=False)
    return float(result.statistic), float(result.pvalue)


def format_report(report: EvalReport) -> str:
    """Fixed-width summary table."""
    lines = [
        f"accuracy   {report.accuracy:7.2f}%",
        f"macro F1   {report.macro_f1:8.3f}",
        f"classes    {', '.join(str(c) for c in report.classes)}",
        "confusion (rows = truth):",
    ]
    width = max(len(str(c)) for c in report.classes) + 6
    header = " " * (width + 2) + "".join(
        f"{'pred ' + str(c):>{width}}" for c in report.classes)
    lines.append(header)
    for k, c in enumerate(report.classes):
        cells = "".join(f"{int(v):>{width}}" for v in report.confusion[k])
        lines.append(f"{'true ' + str(c):>{width + 2}}{cells}")
    if report.per_fold:
        folds = ", ".join(f"{a:.1f}" for a in report.per_fold)
        arr = np.asarray(report.per_fold)
        lines.append(
            f"per-fold accuracy: {folds} (mean {arr.mean():.1f}, "
            f"std {arr.std():.1f})")
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines)


def write_report(report: EvalReport, out_dir, name="report"):
    """JSON + table + confusion CSV under out_dir; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "accuracy": report.accuracy,
        "macro_f1": report.macro_f1,
        "classes": [str(c) for c in report.classes],
        "confusion": report.confusion.tolist(),
        "per_fold": list(report.per_fold),
        "notes": list(report.notes),
    }
    json_path = out / f"{name}.json"
    json_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    table_path = out / f"{name}.txt"
    table_path.write_text(format_report(report) + "\n")
    csv_path = out / f"{name}_confusion.csv"
    header = "truth," + ",".join(f"pred_{c}" for c in report.classes)
    rows = [header] + [
        f"true_{c}," + ",".join(str(int(v)) for v in report.confusion[k])
        for k, c in enumerate(report.classes)
    ]
    csv_path.write_text("\n".join(rows) + "\n")
    return {"json": json_path, "table": table_path, "confusion": csv_path}
