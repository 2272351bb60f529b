"""Grouped bar charts of per-method metrics, written as self-contained SVG."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

METRICS = ("accuracy", "precision", "recall", "f1", "roc_auc")
METRIC_LABELS = {
    "accuracy": "Accuracy",
    "precision": "Precision",
    "recall": "Recall",
    "f1": "F1 score",
    "roc_auc": "ROC-AUC",
}

# fixed ids and no timestamp keep repeated renders byte-identical
_RC = {
    "svg.hashsalt": "malseq",
    "svg.fonttype": "path",
    "font.size": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def bar_gid(method: str, metric: str) -> str:
    return f"bar-{method}-{metric}"


def plot_metrics(rows: list[tuple[str, dict]], out_path, title: str = "") -> None:
    """One group per method, one bar per metric (heights in percent), values printed on top."""
    if not rows:
        raise ValueError("no methods to plot")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(rows) + 1.5), 3.4))
        x = np.arange(len(rows))
        width = 0.8 / len(METRICS)
        for j, metric in enumerate(METRICS):
            heights = [100.0 * float(r[metric]) for _, r in rows]
            bars = ax.bar(x + (j - (len(METRICS) - 1) / 2) * width, heights, width, label=METRIC_LABELS[metric])
            for (method, _), bar in zip(rows, bars):
                bar.set_gid(bar_gid(method, metric))
            ax.bar_label(bars, fmt="%.0f", fontsize=5, padding=1)
        ax.set_xticks(x, [m for m, _ in rows])
        ax.set_ylim(0, 110)
        ax.set_ylabel("%")
        if title:
            ax.set_title(title)
        ax.legend(ncols=len(METRICS), fontsize=6, loc="upper center", bbox_to_anchor=(0.5, -0.08), frameon=False)
        fig.tight_layout()
        fig.savefig(out_path, format="svg", metadata={"Date": None})
        plt.close(fig)
