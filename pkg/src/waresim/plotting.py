"""Render the standard report figures from the CSV artifacts.

Everything draws through the Agg backend and writes straight to files;
figures accompany the delimited outputs rather than replacing them.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_METRIC_LABELS = {
    "score": "Score",
    "delivered_boxes": "Delivered boxes",
    "mean_box_age": "Mean box age",
    "fifo_violation_rate": "FIFO violation rate",
}


def plot_training_curves(curve_csv: str | Path, out_path: str | Path,
                         title: str = "Training score") -> Path:
    """Mean line with a min/max band per episode, from a curves CSV with
    columns episode, mean_score, min_score, max_score."""
    episodes, mean_s, min_s, max_s = [], [], [], []
    with open(curve_csv, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            episodes.append(int(row["episode"]))
            mean_s.append(float(row["mean_score"]))
            min_s.append(float(row["min_score"]))
            max_s.append(float(row["max_score"]))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.fill_between(episodes, min_s, max_s, alpha=0.25, linewidth=0)
    ax.plot(episodes, mean_s, linewidth=1.6)
    ax.set_xlabel("Episode")
    ax.set_ylabel("Score")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path


def plot_policy_comparison(episode_csv: str | Path, out_path: str | Path) -> Path:
    """Bar panel (one subplot per metric) comparing the policies present in
    an episode CSV."""
    per_policy: dict[str, dict[str, list[float]]] = {}
    with open(episode_csv, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            bucket = per_policy.setdefault(row["policy"], {k: [] for k in _METRIC_LABELS})
            for key in _METRIC_LABELS:
                bucket[key].append(float(row[key]))

    policies = sorted(per_policy)
    fig, axes = plt.subplots(2, 2, figsize=(9, 6.5))
    for ax, (key, label) in zip(axes.ravel(), _METRIC_LABELS.items()):
        means = [sum(per_policy[p][key]) / len(per_policy[p][key]) for p in policies]
        lows = [min(per_policy[p][key]) for p in policies]
        highs = [max(per_policy[p][key]) for p in policies]
        err = [
            [m - lo for m, lo in zip(means, lows)],
            [hi - m for m, hi in zip(means, highs)],
        ]
        ax.bar(policies, means, yerr=err, capsize=4, alpha=0.85)
        ax.set_title(label)
        ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path


def plot_sweep(sweep_csv: str | Path, out_path: str | Path) -> Path:
    """Horizontal bars of mean score per combination, best at the top."""
    labels, means, mins, maxs = [], [], [], []
    with open(sweep_csv, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["error"]:
                continue
            labels.append(row["combination"])
            means.append(float(row["mean_score"]))
            mins.append(float(row["min_score"]))
            maxs.append(float(row["max_score"]))
    order = sorted(range(len(means)), key=lambda i: means[i])
    fig, ax = plt.subplots(figsize=(8, 0.45 * max(len(order), 4) + 1.5))
    y = range(len(order))
    ax.barh(list(y), [means[i] for i in order],
            xerr=[
                [means[i] - mins[i] for i in order],
                [maxs[i] - means[i] for i in order],
            ],
            capsize=3, alpha=0.85)
    ax.set_yticks(list(y))
    ax.set_yticklabels([labels[i] for i in order], fontsize=8)
    ax.set_xlabel("Mean score (trailing window)")
    ax.grid(alpha=0.3, axis="x")
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path
