"""Metric and ablation plots (headless matplotlib)."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import RSMatchError  # noqa: E402
from .evaluate import load_metrics  # noqa: E402


def plot_metrics(run_dir, out_path) -> Path:
    """Four-panel training summary: losses, test accuracy, gate mask rate,
    dummy-head utilization."""
    rows = load_metrics(run_dir)
    train = [r for r in rows if r.get("kind") == "train"]
    evals = [r for r in rows if r.get("kind") == "eval"]
    hooks = [r for r in rows if r.get("kind") == "hook"
             and r.get("detector_accuracy") is not None]
    if not train and not evals:
        raise RSMatchError(f"metrics log under {run_dir} holds no plottable rows")

    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    ax = axes[0, 0]
    its = [r["iteration"] for r in train]
    for key, label in (("loss_total", "total"), ("loss_sup", "supervised"),
                       ("loss_unsup_real", "consistency"), ("loss_det_unsup", "det self-train")):
        vals = [(r["iteration"], r[key]) for r in train if r.get(key) is not None]
        if vals:
            ax.plot([v[0] for v in vals], [v[1] for v in vals], label=label, lw=1)
    ax.set_title("losses")
    ax.set_xlabel("iteration")
    ax.legend(fontsize=7)

    ax = axes[0, 1]
    if evals:
        ax.plot([r["iteration"] for r in evals], [r["test_accuracy"] for r in evals],
                marker="o", ms=3, label="test acc")
    if hooks:
        ax.plot([r["iteration"] for r in hooks], [r["detector_accuracy"] for r in hooks],
                marker="s", ms=3, label="detector acc")
    ax.set_title("accuracy")
    ax.set_xlabel("iteration")
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize=7)

    ax = axes[1, 0]
    if train:
        ax.plot(its, [r["mask_rate"] for r in train], lw=1)
    ax.set_title("confidence mask rate")
    ax.set_xlabel("iteration")
    ax.set_ylim(0, 1.02)

    ax = axes[1, 1]
    if train:
        ax.plot(its, [r["synth_gated"] for r in train], lw=1, label="gated synthetic")
        ax.plot(its, [r["dummy_used"] for r in train], lw=1, label="dummy-trained")
    ax.set_title("synthetic routing per batch")
    ax.set_xlabel("iteration")
    ax.legend(fontsize=7)

    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def plot_ablation(results_path, out_path) -> Path:
    """Bar chart of best test accuracy (and detector accuracy) per variant."""
    results = json.loads(Path(results_path).read_text(encoding="utf-8"))
    if not results:
        raise RSMatchError(f"{results_path} holds no ablation results")
    names = [r["variant"] for r in results]
    accs = [r["best_test_accuracy"] for r in results]
    det = [r.get("detector_accuracy") for r in results]

    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(names)), 4))
    xs = range(len(names))
    ax.bar(xs, accs, width=0.4, label="test accuracy")
    if any(d is not None for d in det):
        ax.bar([x + 0.4 for x in xs], [d or 0 for d in det],
               width=0.4, label="detector accuracy")
    ax.set_xticks([x + 0.2 for x in xs])
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=7)
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize=8)
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
