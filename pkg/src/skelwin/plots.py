"""Figure rendering for the CLI report paths.

Every report-producing subcommand can drop a small PNG next to its data
output. Rendering goes through an in-memory buffer and the atomic writer so
interrupted runs never leave half-written files. The Agg backend is forced
because these figures only ever go to disk.
"""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .trajectory import write_atomic

_RC = {
    "figure.figsize": (5.2, 3.4),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
}


def _save(fig, path: str | Path) -> None:
    buf = io.BytesIO()
    fig.savefig(buf, format="png")
    plt.close(fig)
    write_atomic(path, buf.getvalue())


def save_loss_curve(history, path: str | Path) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(range(1, len(history) + 1), history, marker="o", ms=3)
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean cross-entropy")
        ax.set_title("training loss")
        fig.tight_layout()
        _save(fig, path)


def save_confusion_matrix(confusion, class_names, path: str | Path) -> None:
    matrix = np.asarray(confusion, dtype=float)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.2, 3.6))
        im = ax.imshow(matrix, cmap="Blues")
        ax.set_xticks(range(len(class_names)), class_names, rotation=30, ha="right")
        ax.set_yticks(range(len(class_names)), class_names)
        ax.set_xlabel("predicted")
        ax.set_ylabel("true")
        ax.grid(False)
        threshold = matrix.max() / 2 if matrix.max() > 0 else 0.5
        for r in range(matrix.shape[0]):
            for c in range(matrix.shape[1]):
                color = "white" if matrix[r, c] > threshold else "black"
                ax.text(c, r, f"{int(matrix[r, c])}", ha="center", va="center", color=color)
        fig.colorbar(im, ax=ax, shrink=0.8)
        fig.tight_layout()
        _save(fig, path)


def save_sweep_heatmap(rows, path: str | Path) -> None:
    """Accuracy grid over (window size, step) from sweep result rows."""
    betas = sorted({r["window_size"] for r in rows})
    gammas = sorted({r["step"] for r in rows})
    grid = np.full((len(betas), len(gammas)), np.nan)
    for r in rows:
        grid[betas.index(r["window_size"]), gammas.index(r["step"])] = r["action_accuracy"]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.4, 3.4))
        im = ax.imshow(grid, cmap="viridis", vmin=0.0, vmax=1.0)
        ax.set_xticks(range(len(gammas)), gammas)
        ax.set_yticks(range(len(betas)), betas)
        ax.set_xlabel("step")
        ax.set_ylabel("window size")
        ax.set_title("action accuracy")
        ax.grid(False)
        for r in range(grid.shape[0]):
            for c in range(grid.shape[1]):
                if not np.isnan(grid[r, c]):
                    color = "white" if grid[r, c] < 0.6 else "black"
                    ax.text(c, r, f"{grid[r, c]:.3f}", ha="center", va="center", color=color)
        fig.colorbar(im, ax=ax, shrink=0.8)
        fig.tight_layout()
        _save(fig, path)


def save_score_histogram(scores, threshold, path: str | Path) -> None:
    values = list(scores.values())
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.hist(values, bins=40, color="steelblue", alpha=0.85)
        ax.axvline(threshold, color="crimson", ls="--", label=f"threshold {threshold:g}")
        ax.set_xlabel("similarity score")
        ax.set_ylabel("candidates")
        ax.legend()
        fig.tight_layout()
        _save(fig, path)


def save_threshold_curve(curve, path: str | Path) -> None:
    """Precision/recall against the acceptance threshold."""
    taus = [t for t, _, _ in curve]
    recalls = [r for _, _, r in curve]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        known = [(t, p) for t, p, _ in curve if p is not None]
        if known:
            ax.plot([t for t, _ in known], [p for _, p in known], marker="o", ms=3, label="precision")
        ax.plot(taus, recalls, marker="s", ms=3, label="recall")
        ax.set_xlabel("threshold")
        ax.set_ylabel("rate")
        ax.set_ylim(-0.05, 1.05)
        ax.legend()
        fig.tight_layout()
        _save(fig, path)
