"""Figure rendering for reports: accuracy-vs-SNR curves and training curves.

All functions write PNG files; the Agg backend is forced so they work
headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .engine import SnrSweepReport  # noqa: E402


def plot_snr_sweep(reports: dict[str, SnrSweepReport], path) -> None:
    """One accuracy-vs-SNR line per named model."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, rep in reports.items():
        ax.plot(rep.snr_points_db, rep.accuracy, marker="o", label=name)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("Accuracy (%)")
    ax.set_title("Accuracy vs SNR")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_training_curves(metrics: list[dict], path) -> None:
    """Loss and validation accuracy over epochs on twin axes."""
    epochs = [m["epoch"] for m in metrics]
    fig, ax1 = plt.subplots(figsize=(6, 4))
    ax1.plot(epochs, [m["train_loss"] for m in metrics], color="tab:blue",
             label="train loss")
    ax1.set_xlabel("Epoch")
    ax1.set_ylabel("Train loss", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(epochs, [m["val_acc"] for m in metrics], color="tab:orange",
             label="val accuracy")
    ax2.set_ylabel("Validation accuracy (%)", color="tab:orange")
    ax1.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
