"""Figure rendering for CLI reports.

Kept separate from the metrics module on purpose: metrics stay CSV-only and
any run can be re-plotted from its delimited outputs. All rendering uses the
Agg backend and writes PNG files next to the CSVs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .linear import IterationRecord
from .metrics import Curve

__all__ = ["render_curves", "render_trace"]

# Default PNG metadata embeds the matplotlib version; pin it so reruns are
# byte-identical across installs.
_PNG_METADATA = {"Software": "lccf"}

_AXIS_LABELS = {
    "localization": ("interocular error threshold", "localization rate"),
    "precision": ("center error threshold [px]", "precision"),
    "success": ("overlap threshold", "success rate"),
}


def render_curves(curves: list[Curve], out_path: str | Path, title: str | None = None) -> Path:
    """One subplot per curve kind; returns the written path."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    n = max(len(curves), 1)
    fig, axes = plt.subplots(1, n, figsize=(4.2 * n, 3.4), squeeze=False)
    for ax, curve in zip(axes[0], curves):
        ax.plot(curve.thresholds, curve.values, marker="o", markersize=3)
        xlabel, ylabel = _AXIS_LABELS.get(curve.kind, ("threshold", "fraction"))
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_ylim(-0.02, 1.02)
        ax.set_title(curve.kind)
        ax.grid(True, alpha=0.3)
    if not curves:
        axes[0][0].set_axis_off()
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)
    return out_path


def render_trace(records: list[IterationRecord], out_path: str | Path) -> Path:
    """Solver trace: residual and penalty on a log axis, subset size on a
    twin axis."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    iters = [r.iteration for r in records]
    ax.semilogy(iters, [max(r.epsilon, 1e-16) for r in records], marker="o", label="epsilon")
    ax.semilogy(iters, [max(r.sigma, 1e-16) for r in records], marker="s", label="sigma")
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual / penalty")
    ax.grid(True, alpha=0.3)
    twin = ax.twinx()
    twin.plot(iters, [r.subset_size for r in records], color="gray", ls="--", label="subset size")
    twin.set_ylabel("subset size")
    lines, labels = ax.get_legend_handles_labels()
    tlines, tlabels = twin.get_legend_handles_labels()
    ax.legend(lines + tlines, labels + tlabels, loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)
    return out_path
