"""Confusion counts, accuracy/precision/recall/F1, ROC-AUC and classification reports.

Class 1 (malware) is the positive class unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import EmptyEvaluation, LengthMismatch, SingleClass

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(labels, scores, threshold: float = DEFAULT_THRESHOLD, positive: int = 1) -> ConfusionCounts:
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape or labels.ndim != 1:
        raise LengthMismatch(f"labels {labels.shape} and scores {scores.shape} differ")
    if labels.size == 0:
        raise LengthMismatch("nothing to evaluate")
    pred = scores >= threshold
    if positive == 0:
        pred = ~pred
    actual = labels == positive
    return ConfusionCounts(
        tp=int(np.sum(pred & actual)),
        tn=int(np.sum(~pred & ~actual)),
        fp=int(np.sum(pred & ~actual)),
        fn=int(np.sum(~pred & actual)),
    )


def basic_metrics(c: ConfusionCounts) -> tuple[float, float, float, float]:
    """(accuracy, precision, recall, f1); a zero denominator yields 0."""
    if c.total <= 0:
        raise EmptyEvaluation("confusion counts are all zero")
    accuracy = (c.tp + c.tn) / c.total
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    # harmonic mean of precision and recall, reduced to one division so it is correctly rounded
    f1 = 2 * c.tp / (2 * c.tp + c.fp + c.fn) if c.tp else 0.0
    return accuracy, precision, recall, f1


def roc_auc(labels, scores) -> float:
    """Mann-Whitney form of the ROC area: ties between a positive and a negative count half.

    Uses midranks, so it equals the mean pairwise credit over all
    positive/negative pairs.
    """
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape:
        raise LengthMismatch(f"labels {labels.shape} and scores {scores.shape} differ")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC-AUC needs both classes")
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(len(scores))
    # midranks for tied blocks (1-based)
    boundaries = np.flatnonzero(np.diff(sorted_scores)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [len(scores)]])
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = 0.5 * (s + 1 + e)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: float
    per_class: dict
    macro: ClassMetrics
    weighted: ClassMetrics
    confusion: ConfusionCounts

    def headline(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "roc_auc": self.roc_auc,
        }

    def to_dict(self) -> dict:
        return asdict(self)


def classification_report(labels, scores, threshold: float = DEFAULT_THRESHOLD) -> MetricsReport:
    """Per-class and aggregated metrics; headline P/R/F1 are the support-weighted averages."""
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2:
        raise SingleClass("classification report needs both classes")
    per_class = {}
    for cls in (0, 1):
        c = confusion(labels, scores, threshold, positive=cls)
        _, p, r, f = basic_metrics(c)
        per_class[cls] = ClassMetrics(p, r, f, c.tp + c.fn)
    supports = np.array([per_class[c].support for c in (0, 1)], dtype=np.float64)

    def aggregate(weights):
        w = weights / weights.sum()
        return ClassMetrics(
            precision=float(sum(w[c] * per_class[c].precision for c in (0, 1))),
            recall=float(sum(w[c] * per_class[c].recall for c in (0, 1))),
            f1=float(sum(w[c] * per_class[c].f1 for c in (0, 1))),
            support=int(supports.sum()),
        )

    macro = aggregate(np.ones(2))
    weighted = aggregate(supports)
    positive = confusion(labels, scores, threshold)
    accuracy = basic_metrics(positive)[0]
    return MetricsReport(
        accuracy=accuracy,
        precision=weighted.precision,
        recall=weighted.recall,
        f1=weighted.f1,
        roc_auc=roc_auc(labels, scores),
        per_class=per_class,
        macro=macro,
        weighted=weighted,
        confusion=positive,
    )


def format_report(report: MetricsReport, name: str = "") -> str:
    """Plain-text classification report in the familiar column layout."""
    lines = [f"{name}".strip(), f"{'':>14}{'precision':>10}{'recall':>10}{'f1':>10}{'support':>10}"]
    for cls, label in ((0, "goodware(0)"), (1, "malware(1)")):
        m = report.per_class[cls]
        lines.append(f"{label:>14}{m.precision:>10.4f}{m.recall:>10.4f}{m.f1:>10.4f}{m.support:>10d}")
    for label, m in (("macro avg", report.macro), ("weighted avg", report.weighted)):
        lines.append(f"{label:>14}{m.precision:>10.4f}{m.recall:>10.4f}{m.f1:>10.4f}{m.support:>10d}")
    c = report.confusion
    lines.append(f"accuracy {report.accuracy:.4f}  roc_auc {report.roc_auc:.4f}  TP={c.tp} TN={c.tn} FP={c.fp} FN={c.fn}")
    return "\n".join(line for line in lines if line)
