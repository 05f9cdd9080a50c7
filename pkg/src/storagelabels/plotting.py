"""Figures written next to the tab-separated reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .breakage import BreakageReport  # noqa: E402
from .classifier import Category, ClassificationReport  # noqa: E402
from .domains import AccessMode  # noqa: E402
from .eventlog import Kind  # noqa: E402

_SHORT = {
    Category.FP_CREATED_FP_ACCESSED: "FP→FP",
    Category.FP_CREATED_TP_ACCESSED: "FP→TP",
    Category.TP_CREATED_FP_ACCESSED: "TP→FP",
    Category.TP_CREATED_SAME_TP_ACCESSED: "TP→same TP",
    Category.TP_CREATED_OTHER_TP_ACCESSED: "TP→other TP",
}

# no timestamps in the PNG metadata, so reruns are byte-identical
_SAVE = {"dpi": 120, "metadata": {"Software": None}}


def _style(ax):
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    ax.tick_params(labelsize=8)


def plot_categories(report: ClassificationReport, path: str | Path) -> Path:
    """Accesses per category, one panel per storage kind, reads and writes side by side."""
    fig, axes = plt.subplots(1, len(Kind), figsize=(11, 3.6), sharey=False)
    x = np.arange(len(Category))
    width = 0.38
    for ax, kind in zip(axes, Kind):
        for offset, mode in ((-width / 2, AccessMode.READ), (width / 2, AccessMode.WRITE)):
            counts = [report.cell(kind, c, mode).accesses for c in Category]
            ax.bar(x + offset, counts, width, label=mode.value)
        ax.set_xticks(x, [_SHORT[c] for c in Category], rotation=35, ha="right")
        pct = report.third_party_percent(kind)
        ax.set_title(f"{kind.value} ({'n/a' if pct is None else f'{pct}%'} third-party)", fontsize=9)
        _style(ax)
    axes[0].set_ylabel("accesses")
    axes[0].legend(fontsize=8, frameon=False)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, **_SAVE)
    plt.close(fig)
    return out


def plot_top_scripts(report: BreakageReport, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, max(2.0, 0.3 * len(report.top_scripts) + 1)))
    names = [d for d, _ in reversed(report.top_scripts)]
    counts = [n for _, n in reversed(report.top_scripts)]
    ax.barh(names, counts, color="tab:red")
    ax.set_xlabel("denied accesses")
    ax.set_title("script domains denied under default labels", fontsize=9)
    _style(ax)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, **_SAVE)
    plt.close(fig)
    return out
