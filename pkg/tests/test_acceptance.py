"""Acceptance gate: one PASS/FAIL line per criterion, printed and collected
into the terminal summary.

Run alone with ``pytest tests/test_acceptance.py -v -s``.
"""

import contextlib
import os
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from malseq.classic import rf_score, rf_train
from malseq.config import PipelineConfig
from malseq.evaluation import ConfusionCounts, basic_metrics, roc_auc
from malseq.neural import CnnModel, RnnModel, TrainConfig, gradient_check, train_neural
from malseq.pipeline import cmd_run, read_report_csv
from malseq.sequences import (
    PAD,
    LabeledDataset,
    SplitSpec,
    collapse_consecutive,
    fit_length,
    generate_synthetic,
    read_dataset_csv,
    read_public_dataset,
    stratified_split,
    write_dataset_csv,
)

from .conftest import ACCEPTANCE_LINES

PROPERTY_CASES = 200
PUBLIC_DATASET_ENV = "MALSEQ_PUBLIC_DATASET"


def _record(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


@contextlib.contextmanager
def criterion(label: str, budget_s: float | None = None):
    t0 = time.perf_counter()
    notes: list[str] = []
    try:
        yield notes
        elapsed = time.perf_counter() - t0
        if budget_s is not None:
            assert elapsed < budget_s, f"took {elapsed:.1f}s, budget {budget_s:.0f}s"
    except BaseException as exc:
        if isinstance(exc, pytest.skip.Exception):
            _record(f"SKIP {label}: {exc}")
        else:
            _record(f"FAIL {label}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
        raise
    detail = "; ".join(notes)
    _record(f"PASS {label} ({time.perf_counter() - t0:.1f}s){': ' + detail if detail else ''}")


# ------------------------------------------------------------------ 1


def _pairwise_auc(labels, scores) -> Fraction:
    pos = [s for l, s in zip(labels, scores) if l == 1]
    neg = [s for l, s in zip(labels, scores) if l == 0]
    credit = Fraction(0)
    for p in pos:
        for n in neg:
            credit += 1 if p > n else Fraction(1, 2) if p == n else 0
    return credit / (len(pos) * len(neg))


def test_c1_metric_oracles():
    with criterion("C1 metric oracle equivalence", budget_s=10) as notes:
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(500):
            n = int(rng.integers(2, 13))
            labels = rng.integers(0, 2, n)
            labels[rng.choice(n, 2, replace=False)] = [0, 1]
            # coarse grid forces ties
            scores = rng.integers(0, 6, n) / 5.0
            worst = max(worst, abs(roc_auc(labels, scores) - float(_pairwise_auc(labels, scores))))
        assert worst <= 1e-12, worst
        notes.append(f"auc max |diff| {worst:.1e} over 500")

        for _ in range(1000):
            tp, tn, fp, fn = (int(v) for v in rng.integers(0, 50, 4))
            if tp + tn + fp + fn == 0:
                tn = 1
            acc, p, r, f = basic_metrics(ConfusionCounts(tp, tn, fp, fn))
            e_acc = Fraction(tp + tn, tp + tn + fp + fn)
            e_p = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
            e_r = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
            e_f = 2 * e_p * e_r / (e_p + e_r) if e_p + e_r else Fraction(0)
            for got, exp in ((acc, e_acc), (p, e_p), (r, e_r), (f, e_f)):
                # each metric is one correctly rounded division, so it must equal the rounded rational
                assert got == float(exp), (tp, tn, fp, fn, got, exp)
        notes.append("basic_metrics 1000 tuples exact")


# ------------------------------------------------------------------ 2


def _grad_models(seed):
    return [
        CnnModel(8, d_emb=4, n_filters=3, width=3, seed=seed, init_scale=0.5),
        RnnModel(8, d_emb=4, d_hidden=3, seed=seed, init_scale=0.5),
    ]


def test_c2_gradient_correctness():
    with criterion("C2 gradient correctness", budget_s=30) as notes:
        worst = {}
        for seed in (0, 1, 2):
            rng = np.random.default_rng(seed)
            codes = rng.integers(0, 8, (4, 6))
            labels = rng.integers(0, 2, 4)
            for model in _grad_models(seed):
                err = gradient_check(model, codes, labels)
                worst[model.kind] = max(worst.get(model.kind, 0.0), err)
        assert max(worst.values()) <= 1e-4, worst
        rng = np.random.default_rng(0)
        codes, labels = rng.integers(0, 8, (4, 6)), rng.integers(0, 2, 4)
        cnn, rnn = _grad_models(0)
        mut = min(
            gradient_check(cnn, codes, labels, grad_scale={"W": 2.0}),
            gradient_check(rnn, codes, labels, grad_scale={"W_hh": 2.0}),
        )
        assert mut > 1e-2, mut
        notes.append(", ".join(f"{k} worst {v:.1e}" for k, v in sorted(worst.items())) + f", mutated {mut:.2f}")


# ------------------------------------------------------------------ 3, 4, 6

ALL = ["CNN", "RNN", "SVM", "KNN", "XGB", "RF", "GBC"]


def _synth_run(root: Path, overlap: float, methods=None):
    root.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    data = root / "dataset.csv"
    write_dataset_csv(generate_synthetic(1000, 100, overlap, seed=0), data)
    cfg = PipelineConfig.load(None, [f"methods={methods}"] if methods else [])
    outcome = cmd_run(data, cfg, root / "out")
    rows = dict(read_report_csv(root / "out" / "report.csv"))
    return outcome, rows, time.perf_counter() - t0


@pytest.fixture(scope="module")
def separable_run(tmp_path_factory):
    return _synth_run(tmp_path_factory.mktemp("separable"), 0.0)


@pytest.mark.slow
def test_c3_separable_run(separable_run):
    with criterion("C3 separable synthetic run") as notes:
        outcome, rows, elapsed = separable_run
        assert not outcome.failed, [r.error for r in outcome.failed]
        assert sorted(rows) == sorted(ALL)
        low = {m: (r["accuracy"], r["roc_auc"]) for m, r in rows.items() if r["accuracy"] < 0.98 or r["roc_auc"] < 0.99}
        assert not low, low
        assert elapsed < 300, f"took {elapsed:.0f}s"
        notes.append(f"min acc {min(r['accuracy'] for r in rows.values()):.4f}, "
                     f"min auc {min(r['roc_auc'] for r in rows.values()):.4f}, {elapsed:.0f}s")


@pytest.mark.slow
def test_c4_hard_run(tmp_path):
    with criterion("C4 hard synthetic run ordering") as notes:
        _, rows, _ = _synth_run(tmp_path, 0.7, "rnn,knn,svm")
        rnn = rows["RNN"]["roc_auc"]
        for other in ("KNN", "SVM"):
            assert rnn >= rows[other]["roc_auc"] - 0.02, (rnn, other, rows[other]["roc_auc"])
        notes.append(f"AUC RNN {rnn:.4f}, KNN {rows['KNN']['roc_auc']:.4f}, SVM {rows['SVM']['roc_auc']:.4f}")


REFERENCE_ACCURACY = {"KNN": 0.99, "RF": 0.98, "GBC": 0.99, "RNN": 0.99}


@pytest.mark.slow
def test_c5_public_dataset(tmp_path):
    with criterion("C5 public dataset reproduction") as notes:
        source = os.environ.get(PUBLIC_DATASET_ENV)
        if not source:
            pytest.skip(f"set {PUBLIC_DATASET_ENV} to the public 100-call CSV to run")
        t0 = time.perf_counter()
        data = tmp_path / "public.csv"
        write_dataset_csv(read_public_dataset(source), data)
        cfg = PipelineConfig.load(None, ["methods=knn,rf,gbc,rnn"])
        outcome = cmd_run(data, cfg, tmp_path / "out")
        assert not outcome.failed, [r.error for r in outcome.failed]
        rows = dict(read_report_csv(tmp_path / "out" / "report.csv"))
        for m, target in REFERENCE_ACCURACY.items():
            assert abs(rows[m]["accuracy"] - target) <= 0.03, (m, rows[m]["accuracy"])
            assert rows[m]["roc_auc"] >= 0.90, (m, rows[m]["roc_auc"])
        elapsed = time.perf_counter() - t0
        assert elapsed <= 7200
        notes.append(", ".join(f"{m} acc {rows[m]['accuracy']:.3f} auc {rows[m]['roc_auc']:.3f}" for m in REFERENCE_ACCURACY))


@pytest.mark.slow
def test_c6_determinism(separable_run, tmp_path):
    with criterion("C6 determinism") as notes:
        first = separable_run[0].manifest["inputs"]["dataset"]["path"]
        first_dir = Path(first).parent
        _synth_run(tmp_path, 0.0)
        for name in ("dataset.csv", "out/report.csv"):
            assert (first_dir / name).read_bytes() == (tmp_path / name).read_bytes(), name
        notes.append("dataset.csv and report.csv byte-identical")


# ------------------------------------------------------------------ 7

tokens = st.lists(st.sampled_from(["A", "B", "C", "D"]), max_size=30)
many = settings(max_examples=PROPERTY_CASES, deadline=None)
_property_counts: dict[str, int] = {}


def _count(name):
    _property_counts[name] = _property_counts.get(name, 0) + 1


@many
@given(tokens)
def test_c7_collapse_idempotent(seq):
    _count("collapse")
    once = collapse_consecutive(seq)
    assert collapse_consecutive(once) == once
    assert all(a != b for a, b in zip(once, once[1:]))


@many
@given(tokens, st.integers(1, 20))
def test_c7_trailing_pad(seq, length):
    _count("trailing_pad")
    out = fit_length(collapse_consecutive(seq), length)
    assert len(out) == length
    real = [t for t in out if t != "<PAD>"]
    assert out[: len(real)] == real == collapse_consecutive(seq)[:length]


@many
@given(st.integers(2, 40), st.integers(2, 40), st.floats(0.1, 0.9), st.integers(0, 10**6))
def test_c7_stratified_ratio(n0, n1, frac, seed):
    _count("stratified_ratio")
    ds = LabeledDataset([f"r{i}" for i in range(n0 + n1)], np.full((n0 + n1, 3), 2), np.array([0] * n0 + [1] * n1))
    train, test = stratified_split(ds, SplitSpec(frac, seed))
    assert sorted(train.ids + test.ids) == sorted(ds.ids)
    for c, n_c in ((0, n0), (1, n1)):
        assert abs(train.class_counts()[c] / n_c - frac) <= 1 / n_c + 1e-12


@many
@given(rows=st.integers(1, 8), length=st.integers(1, 6), seed=st.integers(0, 10**6))
def test_c7_csv_round_trip(tmp_path_factory, rows, length, seed):
    _count("csv_round_trip")
    rng = np.random.default_rng(seed)
    ds = LabeledDataset([f"s_{i}.x-{seed}" for i in range(rows)], rng.integers(0, 50, (rows, length)),
                        rng.integers(0, 2, rows))
    path = tmp_path_factory.getbasetemp() / "rt.csv"
    write_dataset_csv(ds, path)
    assert read_dataset_csv(path) == ds


def _two_class(draw_labels):
    labels = np.array(draw_labels)
    labels[0], labels[1] = 0, 1
    return labels


@many
@given(st.lists(st.integers(0, 1), min_size=2, max_size=30), st.integers(0, 10**6))
def test_c7_auc_monotone_invariance(raw, seed):
    _count("auc_monotone")
    labels = _two_class(raw)
    scores = np.random.default_rng(seed).integers(0, 8, len(labels)) / 7.0
    base = roc_auc(labels, scores)
    for transform in (lambda s: s**3, lambda s: np.exp(4 * s) - 2, lambda s: 10 * s + 1):
        assert roc_auc(labels, transform(scores)) == pytest.approx(base, abs=1e-12)


@many
@given(st.lists(st.integers(0, 1), min_size=2, max_size=30), st.integers(0, 10**6))
def test_c7_auc_label_flip(raw, seed):
    _count("auc_flip")
    labels = _two_class(raw)
    scores = np.random.default_rng(seed).integers(0, 8, len(labels)) / 7.0
    assert roc_auc(1 - labels, scores) == pytest.approx(1 - roc_auc(labels, scores), abs=1e-12)


@many
@given(st.integers(0, 10**6), st.sampled_from(["cnn", "rnn"]))
def test_c7_pad_row_zero(seed, arch):
    _count("pad_row_zero")
    rng = np.random.default_rng(seed)
    codes = rng.integers(0, 6, (6, 5))
    codes[:, -2:] = PAD
    labels = rng.integers(0, 2, 6)
    if arch == "cnn":
        model = CnnModel(6, d_emb=2, n_filters=2, width=2, seed=seed)
    else:
        model = RnnModel(6, d_emb=2, d_hidden=2, seed=seed)
    train_neural(model, codes, labels, TrainConfig(epochs=1, batch_size=3, seed=seed, lr=0.05))
    assert np.all(model.params["E"][PAD] == 0.0)


@many
@given(st.integers(0, 10**6))
def test_c7_rf_permutation(seed):
    _count("rf_permutation")
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 5, (20, 4))
    y = np.array([0, 1] * 10)
    model = rf_train(X, y, n_trees=5, max_depth=3, seed=seed)
    before = rf_score(model, X)
    model.trees = [model.trees[i] for i in rng.permutation(len(model.trees))]
    assert np.allclose(rf_score(model, X), before, rtol=0, atol=1e-12)


def test_c7_summary():
    """Runs after the property tests in file order and reports their case counts."""
    with criterion("C7 invariant suites") as notes:
        expected = {"collapse", "trailing_pad", "stratified_ratio", "csv_round_trip", "auc_monotone",
                    "auc_flip", "pad_row_zero", "rf_permutation"}
        missing = expected - set(_property_counts)
        if missing:
            pytest.skip(f"property tests not collected in this session: {sorted(missing)}")
        short = {k: v for k, v in _property_counts.items() if v < PROPERTY_CASES}
        assert not short, short
        notes.append(f"{len(expected)} properties, >= {min(_property_counts.values())} cases each")
