"""Per-episode evaluation metrics and cross-episode aggregation.

The CSV column order below is frozen; downstream tooling parses it
positionally.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from pathlib import Path

EPISODE_CSV_COLUMNS = (
    "episode",
    "policy",
    "seed",
    "score",
    "delivered_boxes",
    "mean_box_age",
    "fifo_violation_rate",
    "invalid_action_count",
)


@dataclass
class EpisodeMetrics:
    score: float
    delivered_boxes: int
    mean_box_age: float
    fifo_violations: int
    fifo_violation_rate: float
    invalid_action_count: int


class EpisodeAccumulator:
    """Collects one episode's rewards, deliveries, and box-age samples.

    Steps where the warehouse holds no boxes contribute nothing to the
    mean-age average; an episode that never holds a box reports 0.0.
    """

    def __init__(self) -> None:
        self.score = 0.0
        self.delivered_boxes = 0
        self.fifo_violations = 0
        self.invalid_action_count = 0
        self._age_sums = 0.0
        self._age_steps = 0

    def record_reward(self, reward: float) -> None:
        self.score += reward

    def record_invalid(self) -> None:
        self.invalid_action_count += 1

    def record_delivery(self, delivered_age: int, baseline_age: int | None) -> None:
        """A delivery violates FIFO when a strictly older box of the same
        material existed anywhere in storage (restricted cells included) or
        ready at an entry head."""
        self.delivered_boxes += 1
        if baseline_age is not None and delivered_age < baseline_age:
            self.fifo_violations += 1

    def record_box_ages(self, ages) -> None:
        ages = list(ages)
        if ages:
            self._age_sums += sum(ages) / len(ages)
            self._age_steps += 1

    def finalize(self) -> EpisodeMetrics:
        rate = (
            self.fifo_violations / self.delivered_boxes
            if self.delivered_boxes
            else 0.0
        )
        mean_age = self._age_sums / self._age_steps if self._age_steps else 0.0
        return EpisodeMetrics(
            score=self.score,
            delivered_boxes=self.delivered_boxes,
            mean_box_age=mean_age,
            fifo_violations=self.fifo_violations,
            fifo_violation_rate=rate,
            invalid_action_count=self.invalid_action_count,
        )


def aggregate(metrics_list: list[EpisodeMetrics], window: int) -> dict[str, dict[str, float]]:
    """mean/min/max per field over the trailing ``window`` episodes."""
    if not metrics_list:
        raise ValueError("cannot aggregate an empty metrics list")
    if window < 1 or window > len(metrics_list):
        raise ValueError(
            f"window must be in [1, {len(metrics_list)}], got {window}"
        )
    tail = metrics_list[-window:]
    out: dict[str, dict[str, float]] = {}
    for f in fields(EpisodeMetrics):
        values = [getattr(m, f.name) for m in tail]
        out[f.name] = {
            "mean": sum(values) / len(values),
            "min": min(values),
            "max": max(values),
        }
    return out


def write_episode_csv(
    path: str | Path,
    rows: list[tuple[int, str, int, EpisodeMetrics]],
) -> None:
    """One row per (episode index, policy name, seed, metrics)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(EPISODE_CSV_COLUMNS)
        for episode, policy, seed, m in rows:
            writer.writerow(
                [
                    episode,
                    policy,
                    seed,
                    repr(m.score),
                    m.delivered_boxes,
                    repr(m.mean_box_age),
                    repr(m.fifo_violation_rate),
                    m.invalid_action_count,
                ]
            )


def read_episode_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
