"""Matplotlib renderings of the CLI's delimited outputs (saved next to them)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .label_space import LabelSpace


def save_label_histogram(space: LabelSpace, counts, path: str, title: str = "Training label distribution") -> None:
    counts = np.asarray(counts)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(space.centers, counts, width=0.9 * space.delta_y, align="edge", color="#4878cf")
    ax.set_xlabel("label")
    ax.set_ylabel("count")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_distribution_comparison(space: LabelSpace, label_hist, pred_hist, path: str) -> None:
    """Overlaid label vs prediction histograms on the shared bin grid."""
    label_hist = np.asarray(label_hist, dtype=float)
    pred_hist = np.asarray(pred_hist, dtype=float)
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.9 * space.delta_y
    ax.bar(space.centers, label_hist, width=width, align="edge",
           color="#ee854a", alpha=0.7, label="labels")
    ax.bar(space.centers, pred_hist, width=width, align="edge",
           color="#4878cf", alpha=0.7, label="predictions")
    ax.set_xlabel("label / prediction")
    ax.set_ylabel("count")
    ax.set_title("Test-set label vs prediction distribution")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_training_curves(records, path: str) -> None:
    """Train loss and validation region MAEs per epoch."""
    epochs = [r.epoch for r in records]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(epochs, [r.train_total for r in records], label="total", color="#4878cf")
    ax1.plot(epochs, [r.train_sample for r in records], label="sample term", color="#6acc65")
    ax1.plot(epochs, [r.train_dist for r in records], label="distribution term", color="#d65f5f")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("train loss")
    ax1.legend()
    for name, color in (("all", "#4878cf"), ("few", "#d65f5f")):
        series = [
            (e, r.val_report.regions[name].mae)
            for e, r in zip(epochs, records)
            if r.val_report.regions.get(name) is not None
        ]
        if series:
            ax2.plot(*zip(*series), label=f"val {name} MAE", color=color)
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("validation MAE")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_ablation_figure(axis_name: str, labels, few_maes, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = np.arange(len(labels))
    ax.bar(xs, few_maes, color="#4878cf", width=0.6)
    ax.set_xticks(xs)
    ax.set_xticklabels([str(v) for v in labels])
    ax.set_xlabel(axis_name)
    ax.set_ylabel("few-shot MAE")
    ax.set_title(f"Few-shot MAE across {axis_name}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
