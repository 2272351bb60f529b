"""End-to-end stages: build a dataset from fragments, run every method, write reports."""

from __future__ import annotations

import hashlib
import json
import logging
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .classic import featurize
from .config import CLASSIC, DISPLAY_NAMES, PipelineConfig
from .errors import InputError, MalseqError, SchemaMismatch
from .evaluation import MetricsReport, classification_report, format_report
from .ingest import CallSequence, read_fragment
from .neural import CnnModel, RnnModel, train_neural
from .persist import atomic_write_text, save_model
from .plotting import METRICS, plot_metrics
from .selection import grid_search
from .sequences import (
    UNK,
    LabeledDataset,
    SplitSpec,
    build_vocabulary,
    encode_dataset,
    oversample_minority,
    prepare_tokens,
    read_dataset_csv,
    split_indices,
    stratified_split,
    write_dataset_csv,
)

log = logging.getLogger(__name__)

REPORT_HEADER = ["method", *METRICS]


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class StageTimer:
    def __init__(self):
        self.seconds: dict[str, float] = {}

    def __call__(self, name: str):
        timer = self

        class _Stage:
            def __enter__(self):
                self.t0 = time.perf_counter()
                return self

            def __exit__(self, *exc):
                dt = time.perf_counter() - self.t0
                timer.seconds[name] = round(timer.seconds.get(name, 0.0) + dt, 4)
                log.info("stage %s: %.2fs", name, dt)

        return _Stage()


def write_manifest(path, manifest: dict) -> None:
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _environment() -> dict:
    import matplotlib

    return {
        "malseq": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "matplotlib": matplotlib.__version__,
    }


# ---------------------------------------------------------------- build


@dataclass
class BuildOutcome:
    dataset: LabeledDataset
    vocab_size: int
    train_ids: list[str]
    manifest: dict


def build_dataset(benign: list[CallSequence], malware: list[CallSequence], cfg: PipelineConfig) -> tuple:
    """Collapse, fit and encode both classes with a vocabulary drawn from the training split only.

    Rows are ordered benign first, then malware. Returns the dataset, the
    vocabulary and the training-row indices (identical to what ``run``
    recomputes from the same seed and fraction).
    """
    seqs = [CallSequence(s.source_id, s.tokens, 0) for s in benign]
    seqs += [CallSequence(s.source_id, s.tokens, 1) for s in malware]
    ids = [s.source_id for s in seqs]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise SchemaMismatch(f"duplicate sequence ids across fragments: {dupes[:5]}")
    length = cfg["length"]
    fitted = [prepare_tokens(s.tokens, length) for s in seqs]
    labels = np.array([s.label for s in seqs])
    train_idx, _ = split_indices(labels, cfg["train_fraction"], cfg["seed"])
    vocab = build_vocabulary([fitted[i] for i in train_idx])
    ds = encode_dataset(seqs, vocab, length)
    return ds, vocab, train_idx


def cmd_build(benign_path, malware_path, cfg: PipelineConfig, out_dir) -> BuildOutcome:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timer = StageTimer()
    with timer("read_fragments"):
        benign = read_fragment(benign_path)
        malware = read_fragment(malware_path)
    with timer("encode"):
        ds, vocab, train_idx = build_dataset(benign, malware, cfg)
    with timer("write"):
        write_dataset_csv(ds, out / "dataset.csv")
        vocab.save(out / "vocab.csv")
    train_ids = [ds.ids[i] for i in train_idx]
    manifest = {
        "stage": "build",
        "config": cfg.snapshot(),
        "inputs": {
            "benign": {"path": str(benign_path), "sha256": file_digest(benign_path), "rows": len(benign)},
            "malware": {"path": str(malware_path), "sha256": file_digest(malware_path), "rows": len(malware)},
        },
        "outputs": {"dataset": "dataset.csv", "vocabulary": "vocab.csv"},
        "vocabulary_size": len(vocab),
        "vocabulary_source_ids": train_ids,
        "environment": _environment(),
        "timings_seconds": timer.seconds,
    }
    write_manifest(out / "build_manifest.json", manifest)
    return BuildOutcome(ds, len(vocab), train_ids, manifest)


# ---------------------------------------------------------------- run


@dataclass
class MethodResult:
    method: str
    report: MetricsReport | None = None
    error: str | None = None
    best_params: dict | None = None
    history: list[float] | None = None


@dataclass
class RunOutcome:
    results: list[MethodResult] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    @property
    def failed(self) -> list[MethodResult]:
        return [r for r in self.results if r.error is not None]

    def succeeded(self) -> list[MethodResult]:
        return [r for r in self.results if r.error is None]


def _clip_unseen(codes: np.ndarray, n_codes: int) -> np.ndarray:
    return np.where(codes >= n_codes, UNK, codes)


def _neural_rows(train: LabeledDataset, max_rows: int, seed: int) -> np.ndarray:
    if max_rows <= 0 or len(train) <= max_rows:
        return np.arange(len(train))
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(len(train), size=max_rows, replace=False))


def run_method(method, train, test, cfg, n_codes, out: Path) -> MethodResult:
    seed = cfg["seed"]
    threshold = cfg["threshold"]
    test_codes = _clip_unseen(test.codes, n_codes)
    if method in CLASSIC:
        fixed = cfg.fixed(method)
        cv = grid_search(
            method,
            cfg.grid(method) or {"_": [None]},
            train,
            cfg["cv.folds"],
            seed,
            metric=cfg["cv.metric"],
            featurization=cfg["featurization"],
            n_codes=n_codes,
            fixed=fixed,
        )
        (out / f"cv_{method}.csv").write_text(cv.to_csv(), encoding="utf-8", newline="")
        scores = cv.model.score(featurize(test_codes, cfg["featurization"], n_codes))
        save_model(cv.model, out / "models" / f"{method}.json")
        report = classification_report(test.labels, scores, threshold)
        return MethodResult(method, report, best_params={**fixed, **cv.best_params})

    rows = _neural_rows(train, cfg["neural.max_rows"], seed)
    arch = cfg.architecture(method)
    model_cls = CnnModel if method == "cnn" else RnnModel
    model = model_cls(n_codes, seed=seed, **arch)
    model, history = train_neural(model, train.codes[rows], train.labels[rows], cfg.train_config(method))
    (out / f"loss_{method}.csv").write_text(
        "epoch,loss\n" + "".join(f"{e + 1},{loss:.8f}\n" for e, loss in enumerate(history)),
        encoding="utf-8",
        newline="",
    )
    save_model(model, out / "models" / f"{method}.json")
    scores = model.score(test_codes)
    report = classification_report(test.labels, scores, threshold)
    return MethodResult(method, report, history=history)


def format_report_row(name: str, report: MetricsReport) -> str:
    h = report.headline()
    return ",".join([name, *(f"{h[m]:.6f}" for m in METRICS)])


def write_report_csv(results: list[MethodResult], path) -> None:
    lines = [",".join(REPORT_HEADER)]
    lines += [format_report_row(DISPLAY_NAMES[r.method], r.report) for r in results if r.report is not None]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")


def format_table(results: list[MethodResult]) -> str:
    """Aligned percentage table, one row per method."""
    head = f"{'Method':<8}{'Accuracy (%)':>14}{'Precision (%)':>15}{'Recall (%)':>12}{'F1 score (%)':>14}{'ROC-AUC (%)':>13}"
    lines = [head, "-" * len(head)]
    for r in results:
        name = DISPLAY_NAMES[r.method]
        if r.report is None:
            lines.append(f"{name:<8}  FAILED: {r.error}")
            continue
        h = r.report.headline()
        lines.append(
            f"{name:<8}{100 * h['accuracy']:>14.2f}{100 * h['precision']:>15.2f}"
            f"{100 * h['recall']:>12.2f}{100 * h['f1']:>14.2f}{100 * h['roc_auc']:>13.2f}"
        )
    return "\n".join(lines) + "\n"


def read_report_csv(path) -> list[tuple[str, dict]]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0].split(",") != REPORT_HEADER:
        raise SchemaMismatch(f"{path}: expected header {','.join(REPORT_HEADER)}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(REPORT_HEADER):
            raise SchemaMismatch(f"{path}: line {lineno} has {len(cells)} columns")
        try:
            values = {m: float(c) for m, c in zip(METRICS, cells[1:])}
        except ValueError:
            raise SchemaMismatch(f"{path}: line {lineno} has a non-numeric metric") from None
        rows.append((cells[0], values))
    if not rows:
        raise SchemaMismatch(f"{path}: report has no method rows")
    return rows


def cmd_chart(report_csv, out_path, title: str = "") -> int:
    rows = read_report_csv(report_csv)
    plot_metrics(rows, out_path, title)
    return len(rows)


def _load_build_manifest(dataset_path: Path) -> dict | None:
    candidate = dataset_path.with_name("build_manifest.json")
    if candidate.is_file():
        try:
            return json.loads(candidate.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            log.warning("ignoring unreadable %s", candidate)
    return None


def cmd_run(dataset_path, cfg: PipelineConfig, out_dir) -> RunOutcome:
    """Split, rebalance the training side, fit every enabled method and evaluate on the held-out rows.

    A failing method is recorded and skipped; the report still lists every
    method that succeeded.
    """
    dataset_path = Path(dataset_path)
    out = Path(out_dir)
    (out / "models").mkdir(parents=True, exist_ok=True)
    timer = StageTimer()
    seed = cfg["seed"]

    with timer("load"):
        ds = read_dataset_csv(dataset_path)
    with timer("split"):
        train, test = stratified_split(ds, SplitSpec(cfg["train_fraction"], seed))
        if cfg["oversample"]:
            train = oversample_minority(train, seed)
    test_ids = set(test.ids)
    n_codes = int(train.codes.max(initial=UNK)) + 1

    leakage = {"oversampled_rows_from_test": sum(1 for i in train.ids if i.split("__os")[0] in test_ids)}
    build = _load_build_manifest(dataset_path)
    if build is not None and "vocabulary_source_ids" in build:
        leakage["vocabulary_rows_from_test"] = sum(1 for i in build["vocabulary_source_ids"] if i in test_ids)
    if any(leakage.values()):
        raise MalseqError(f"test rows leaked into training-side stages: {leakage}")

    outcome = RunOutcome()
    for method in cfg["methods"]:
        with timer(f"method:{method}"):
            try:
                result = run_method(method, train, test, cfg, n_codes, out)
            except (MalseqError, ValueError, ArithmeticError, FloatingPointError) as exc:
                log.error("method %s failed: %s", method, exc)
                result = MethodResult(method, error=f"{type(exc).__name__}: {exc}")
        outcome.results.append(result)

    with timer("report"):
        write_report_csv(outcome.results, out / "report.csv")
        text = format_table(outcome.results)
        details = [format_report(r.report, DISPLAY_NAMES[r.method]) for r in outcome.results if r.report]
        (out / "report.txt").write_text(text + "\n" + "\n\n".join(details) + "\n", encoding="utf-8", newline="")
        if outcome.succeeded():
            rows = [(DISPLAY_NAMES[r.method], r.report.headline()) for r in outcome.succeeded()]
            plot_metrics(rows, out / "report.svg")

    outcome.manifest = {
        "stage": "run",
        "config": cfg.snapshot(),
        "config_sha256": cfg.digest(),
        "inputs": {"dataset": {"path": str(dataset_path), "sha256": file_digest(dataset_path), "rows": len(ds)}},
        "split": {
            "train_rows": len(train),
            "test_rows": len(test),
            "class_counts_train": list(train.class_counts()),
            "class_counts_test": list(test.class_counts()),
            "test_ids": test.ids,
        },
        "leakage_check": leakage,
        "methods": {
            r.method: (
                {"error": r.error}
                if r.error
                else {"metrics": r.report.headline(), "best_params": r.best_params, "loss_history": r.history}
            )
            for r in outcome.results
        },
        "outputs": {
            "report_csv": "report.csv",
            "report_text": "report.txt",
            "report_chart": "report.svg" if outcome.succeeded() else None,
            "models": {r.method: f"models/{r.method}.json" for r in outcome.succeeded()},
        },
        "environment": _environment(),
        "timings_seconds": timer.seconds,
    }
    write_manifest(out / "manifest.json", outcome.manifest)
    return outcome
