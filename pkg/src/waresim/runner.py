"""Drive policies through episodes and collect metrics.

The runner owns the per-episode accumulator and also tracks two qualitative
facts used by the evaluation suite: whether a restricted cell ever formed,
and whether any delivery happened while the oldest box of the delivered
material sat on a restricted cell.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import WarehouseConfig
from .mdp import ActionClass, Env
from .metrics import EpisodeAccumulator, EpisodeMetrics
from .policies import make_policy
from .simcore import boxes_in_warehouse


@dataclass
class EpisodeOutcome:
    metrics: EpisodeMetrics
    restricted_cell_seen: bool
    delivery_with_restricted_oldest: bool


def run_episode(env: Env, policy, seed: int) -> EpisodeOutcome:
    """Run one full episode of ``policy`` (a SimState -> action callable)."""
    env.reset(seed)
    acc = EpisodeAccumulator()
    restricted_seen = False
    restricted_oldest = False

    while not env.done:
        state = env.state
        action = policy(state)
        will_deliver = None
        if state.carried is not None:
            # inspect FIFO context before the state mutates
            mat = state.carried.material
            restricted_cells = state.reachability.restricted
            oldest_restricted = max(
                (
                    box.age
                    for cell, box in state.grid.items()
                    if box.material == mat and cell in restricted_cells
                ),
                default=None,
            )
            will_deliver = (mat, state.carried.age, oldest_restricted)

        result = env.step(action)
        cls = result.info["action_class"]
        acc.record_reward(result.reward)
        if cls is ActionClass.INVALID:
            acc.record_invalid()
        elif cls is ActionClass.DELIVERY:
            acc.record_delivery(
                result.info["delivered_box_age"], result.info["fifo_baseline_age"]
            )
            _, age, oldest_restricted = will_deliver
            if oldest_restricted is not None and oldest_restricted > age:
                restricted_oldest = True
        acc.record_box_ages(b.age for b in boxes_in_warehouse(env.state))
        if env.state.reachability.restricted:
            restricted_seen = True

    return EpisodeOutcome(acc.finalize(), restricted_seen, restricted_oldest)


def run_policy_episodes(
    cfg: WarehouseConfig, policy_name: str, episodes: int, seed: int
) -> list[EpisodeOutcome]:
    """Run ``episodes`` episodes; episode k uses world seed seed+k so a seed
    identifies a reproducible batch."""
    env = Env(cfg)
    policy = make_policy(policy_name, seed)
    return [run_episode(env, policy, seed + k) for k in range(episodes)]
