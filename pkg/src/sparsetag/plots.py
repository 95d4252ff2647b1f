"""Matplotlib figure rendering for run, sweep, and ablation reports.

Figures are written next to the CSV/JSON output with the Agg backend so
report generation works headless. Each helper takes already-computed
numbers; nothing here recomputes results.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["plot_seed_accuracies", "plot_history", "plot_sweep", "plot_variants"]

_PNG_META = {"metadata": {"Software": None}}  # keep PNG bytes reproducible


def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, **_PNG_META)
    plt.close(fig)


def plot_seed_accuracies(per_seed: Mapping[int, float], mean: float, path: str | Path) -> None:
    """Bar per seed with the mean as a horizontal line."""
    seeds = sorted(per_seed)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar([str(s) for s in seeds], [per_seed[s] for s in seeds], color="#4878d0")
    ax.axhline(mean, color="#d65f5f", linestyle="--", linewidth=1, label=f"mean {mean:.3f}")
    ax.set_xlabel("seed")
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0, 1)
    ax.legend(loc="lower right")
    fig.tight_layout()
    _save(fig, Path(path))


def plot_history(histories: Mapping[int, tuple[Sequence[float], Sequence[float]]],
                 path: str | Path) -> None:
    """Training loss and validation accuracy curves, one line per seed."""
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(9, 3.5))
    for seed in sorted(histories):
        loss, acc = histories[seed]
        epochs = range(1, len(loss) + 1)
        ax_loss.plot(epochs, loss, label=f"seed {seed}", linewidth=1)
        ax_acc.plot(epochs, acc, label=f"seed {seed}", linewidth=1)
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("train loss")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("val accuracy")
    ax_acc.set_ylim(0, 1)
    ax_loss.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, Path(path))


def plot_sweep(rows: Sequence[tuple[float, float, float]], path: str | Path) -> None:
    """Mean accuracy vs sparsity ratio with std error bars."""
    ratios = [r for r, _, _ in rows]
    means = [m for _, m, _ in rows]
    stds = [s for _, _, s in rows]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.errorbar(ratios, means, yerr=stds, marker="o", capsize=3, color="#4878d0")
    ax.set_xlabel("sparsity ratio")
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0, 1)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, Path(path))


def plot_variants(rows: Sequence[tuple[str, float, float]], path: str | Path) -> None:
    """Grouped accuracy bars for ablation variants."""
    labels = [name for name, _, _ in rows]
    means = [m for _, m, _ in rows]
    stds = [s for _, _, s in rows]
    fig, ax = plt.subplots(figsize=(max(5, 1.4 * len(rows)), 3.5))
    ax.bar(labels, means, yerr=stds, capsize=3, color="#4878d0")
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0, 1)
    for tick in ax.get_xticklabels():
        tick.set_rotation(15)
    fig.tight_layout()
    _save(fig, Path(path))
