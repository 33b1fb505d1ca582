"""Static SVG figures. Output bytes are deterministic for a given input."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evalmetrics import histogram  # noqa: E402

plt.rcParams["svg.hashsalt"] = "uavheading"
plt.rcParams["svg.fonttype"] = "path"


def save_svg(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def error_vs_index(errors_deg, title="Absolute heading error on the test split"):
    e = np.abs(np.asarray(errors_deg, dtype=float))
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(np.arange(len(e)), e, lw=0.8)
    if len(e):
        k = int(np.argmax(e))
        ax.plot([k], [e[k]], "o", color="tab:red")
        ax.annotate(f"max {e[k]:.2f}°", (k, e[k]), textcoords="offset points", xytext=(5, 5))
    ax.set_xlabel("test sample index")
    ax.set_ylabel("|error| (deg)")
    ax.set_title(title)
    fig.tight_layout()
    return fig


def pred_vs_true(truth_deg, pred_deg):
    t = np.asarray(truth_deg, dtype=float)
    p = np.asarray(pred_deg, dtype=float)
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.scatter(t, p, s=4, label="predictions")
    lo = float(min(t.min(), p.min())) if len(t) else -1.0
    hi = float(max(t.max(), p.max())) if len(t) else 1.0
    ax.plot([lo, hi], [lo, hi], "k--", lw=1, label="ideal")
    ax.set_xlabel("true heading (deg)")
    ax.set_ylabel("predicted heading (deg)")
    ax.legend(loc="upper left")
    fig.tight_layout()
    return fig


def maxae_histogram(max_ae, bin_width: float = 0.05, mean: float | None = None, ci: float | None = None):
    edges, counts = histogram(max_ae, bin_width)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(edges, counts, width=bin_width, align="edge", edgecolor="k")
    if mean is not None:
        if ci is not None:
            ax.axvspan(mean - ci, mean + ci, alpha=0.25, color="tab:orange", label="95% CI")
        ax.axvline(mean, ls="--", color="tab:red", label=f"mean {mean:.3f}°")
        ax.legend()
    ax.set_xlabel("MaxAE (deg)")
    ax.set_ylabel("runs")
    fig.tight_layout()
    return fig


def loss_history(epochs, train_loss, val_loss):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.semilogy(epochs, train_loss, label="train")
    ax.semilogy(epochs, val_loss, label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE (rad²)")
    ax.legend()
    fig.tight_layout()
    return fig


def alignment_trace(episodes: dict[int, list[float]], band: float = 1.0):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for i, errs in sorted(episodes.items()):
        ax.plot(np.arange(len(errs)), np.maximum(np.abs(errs), 1e-6), lw=0.7)
    ax.axhline(band, ls="--", color="k", lw=0.8)
    ax.set_yscale("log")
    ax.set_xlabel("frame")
    ax.set_ylabel("|alignment error| (deg)")
    fig.tight_layout()
    return fig
