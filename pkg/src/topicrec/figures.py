"""Render evaluation figures next to the delimited report."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluate import SCOPES, MetricReport

_PNG_META = {"Software": "topicrec"}


def render_report_figures(report: MetricReport, out_dir, stem: str = "report") -> list[Path]:
    """Write the F1-by-bucket bar chart and the precision/recall-vs-k line
    chart as PNG files; returns the created paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = {(row.scope, row.k): row for row in report.rows}
    ks = list(report.ks)

    paths = []
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    width = 0.8 / len(ks)
    xs = np.arange(len(SCOPES))
    for j, k in enumerate(ks):
        vals = [table[(scope, k)].f1 for scope in SCOPES]
        ax.bar(xs + (j - (len(ks) - 1) / 2) * width, vals, width, label=f"F1@{k}")
    ax.set_xticks(xs)
    ax.set_xticklabels(SCOPES)
    ax.set_ylabel("micro F1")
    ax.set_ylim(0, 1)
    ax.set_title(f"F1 by label bucket (avg F1 = {report.avg_f1:.3f})")
    ax.legend(frameon=False)
    fig.tight_layout()
    path = out_dir / f"{stem}.f1_by_bucket.png"
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    prec = [table[("all", k)].precision for k in ks]
    rec = [table[("all", k)].recall for k in ks]
    ax.plot(ks, prec, marker="o", label="precision")
    ax.plot(ks, rec, marker="s", label="recall")
    ax.set_xticks(ks)
    ax.set_xlabel("k")
    ax.set_ylabel("score")
    ax.set_ylim(0, 1)
    ax.set_title("Overall precision and recall at top-k")
    ax.legend(frameon=False)
    fig.tight_layout()
    path = out_dir / f"{stem}.precision_recall.png"
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    paths.append(path)
    return paths
