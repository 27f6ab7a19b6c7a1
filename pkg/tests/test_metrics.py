"""Metric accumulation, aggregation, and the frozen CSV schema."""

import pytest

from waresim.config import default_config
from waresim.metrics import (
    EPISODE_CSV_COLUMNS,
    EpisodeAccumulator,
    EpisodeMetrics,
    aggregate,
    read_episode_csv,
    write_episode_csv,
)
from waresim.runner import run_policy_episodes


def make_metrics(**overrides):
    base = dict(score=-10.0, delivered_boxes=4, mean_box_age=12.0,
                fifo_violations=1, fifo_violation_rate=0.25,
                invalid_action_count=0)
    base.update(overrides)
    return EpisodeMetrics(**base)


def test_delivery_at_baseline_is_no_violation():
    acc = EpisodeAccumulator()
    acc.record_delivery(delivered_age=30, baseline_age=30)
    m = acc.finalize()
    assert m.delivered_boxes == 1
    assert m.fifo_violations == 0
    assert m.fifo_violation_rate == 0.0


def test_violation_rate_is_violations_over_deliveries():
    acc = EpisodeAccumulator()
    acc.record_delivery(30, 30)
    acc.record_delivery(10, 50)
    m = acc.finalize()
    assert m.fifo_violations == 1
    assert m.fifo_violation_rate == 0.5
    assert m.fifo_violation_rate * m.delivered_boxes == m.fifo_violations


def test_no_deliveries_rate_zero():
    assert EpisodeAccumulator().finalize().fifo_violation_rate == 0.0


def test_missing_baseline_means_no_violation():
    acc = EpisodeAccumulator()
    acc.record_delivery(0, None)
    assert acc.finalize().fifo_violations == 0


def test_mean_box_age_skips_empty_steps():
    acc = EpisodeAccumulator()
    acc.record_box_ages([])
    acc.record_box_ages([10, 20])
    acc.record_box_ages([])
    acc.record_box_ages([40])
    assert acc.finalize().mean_box_age == pytest.approx((15 + 40) / 2)


def test_mean_box_age_zero_for_always_empty_warehouse():
    acc = EpisodeAccumulator()
    for _ in range(5):
        acc.record_box_ages([])
    assert acc.finalize().mean_box_age == 0.0


def test_ehp_zero_violations_without_restricted_cells():
    cfg = default_config()
    outs = run_policy_episodes(cfg, "ehp", episodes=6, seed=50)
    clean = [o for o in outs if not o.restricted_cell_seen]
    assert clean, "expected at least one episode without restricted cells"
    for o in clean:
        assert o.metrics.fifo_violations == 0


# -- aggregation ---------------------------------------------------------------


def test_aggregate_identical_episodes():
    stats = aggregate([make_metrics()] * 5, window=5)
    for field_stats in stats.values():
        assert field_stats["mean"] == field_stats["min"] == field_stats["max"]


def test_aggregate_uses_trailing_window():
    history = [make_metrics(score=float(-i)) for i in range(30)]
    stats = aggregate(history, window=10)
    # entries 20..29 -> scores -20..-29
    assert stats["score"]["max"] == -20.0
    assert stats["score"]["min"] == -29.0
    assert stats["score"]["mean"] == pytest.approx(-24.5)


def test_aggregate_single_episode():
    m = make_metrics()
    stats = aggregate([m], window=1)
    assert stats["score"]["mean"] == m.score
    assert stats["delivered_boxes"]["max"] == m.delivered_boxes


def test_aggregate_rejects_empty_or_oversized_window():
    with pytest.raises(ValueError):
        aggregate([], window=1)
    with pytest.raises(ValueError):
        aggregate([make_metrics()], window=2)


def test_aggregation_is_order_stable():
    history = [make_metrics(score=float(-i)) for i in range(10)]
    assert aggregate(history, 10) == aggregate(list(history), 10)


# -- CSV schema ----------------------------------------------------------------


def test_episode_csv_round_trip(tmp_path):
    path = tmp_path / "episodes.csv"
    rows = [(0, "ehp", 7, make_metrics()), (1, "ehp", 7, make_metrics(score=-2.5))]
    write_episode_csv(path, rows)
    parsed = read_episode_csv(path)
    assert list(parsed[0].keys()) == list(EPISODE_CSV_COLUMNS)
    assert parsed[0]["policy"] == "ehp"
    assert float(parsed[1]["score"]) == -2.5
    assert int(parsed[0]["delivered_boxes"]) == 4
