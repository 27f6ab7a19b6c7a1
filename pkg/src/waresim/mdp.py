"""RL-facing environment: observation tensor, action classification, reward,
and the step/reset episode loop.

Observation layout (frozen; it is the wire contract of the protocol server):
an (rows, cols, 6+m) uint8 tensor, planes in this order:

    0  box material    round(255 * material / m) at boxed cells
    1  box age         round(255 * min(age, age_cap) / age_cap)
    2  restricted      255 at restricted cells
    3  agent           255 at the agent cell when empty-handed, 128 carrying
    4  carried mat.    round(255 * material / m) at the agent cell
    5  entry status    255 at entry points whose head item is ready
    5+k for k=1..m     255 at delivery points with an open ready order of
                       material k

Actions are grid coordinates; the flat index of (i, j) is i*cols + j.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import Coord, WarehouseConfig
from .simcore import (
    MoveEffect,
    SimState,
    apply_move,
    create_initial_state,
    oldest_available_age,
    oldest_material_age,
    tick_generation,
)


class EpisodeDone(RuntimeError):
    """step() was called on a finished episode."""


class ActionClass(Enum):
    INVALID = "invalid"
    IDLE = "idle"
    DELIVERY = "delivery"
    NEUTRAL = "neutral"


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict


def flat_to_coord(index: int, cols: int) -> Coord:
    return (index // cols, index % cols)


def coord_to_flat(cell: Coord, cols: int) -> int:
    return cell[0] * cols + cell[1]


def _material_level(material: int, num_materials: int) -> int:
    return round(255 * material / num_materials)


def encode_state(state: SimState) -> np.ndarray:
    cfg = state.cfg
    m = cfg.num_materials
    obs = np.zeros((cfg.rows, cfg.cols, cfg.num_planes), dtype=np.uint8)

    for cell, box in state.grid.items():
        obs[cell[0], cell[1], 0] = _material_level(box.material, m)
        obs[cell[0], cell[1], 1] = round(255 * min(box.age, cfg.age_cap) / cfg.age_cap)
    for cell in state.reachability.restricted:
        obs[cell[0], cell[1], 2] = 255

    ar, ac = state.agent_pos
    if state.carried is None:
        obs[ar, ac, 3] = 255
    else:
        obs[ar, ac, 3] = 128
        obs[ar, ac, 4] = _material_level(state.carried.material, m)

    for entry in cfg.entry_points:
        if state.head_ready(entry):
            obs[entry[0], entry[1], 5] = 255
    for order in state.open_ready_orders():
        p = order.delivery_point
        obs[p[0], p[1], 5 + order.material] = 255
    return obs


# -- action legality ---------------------------------------------------------


def _move_effect(state: SimState, target: Coord) -> MoveEffect | None:
    """What apply_move() would do for ``target``; None when the move is
    illegal.  Must stay in lockstep with apply_move's own checks."""
    cfg = state.cfg
    if not cfg.is_inside(target):
        return None
    reach = state.reachability
    if state.carried is None:
        if target in cfg.entry_points:
            return MoveEffect.PICK_FROM_ENTRY if state.head_ready(target) else None
        if target in cfg.delivery_points:
            return None
        if target in state.grid:
            return MoveEffect.PICK_FROM_GRID if target in reach.pickable else None
        if cfg.is_interior(target) and target not in reach.placeable:
            return None
        return MoveEffect.NEUTRAL
    else:
        if target in cfg.delivery_points:
            order = state.order_at(target)
            ok = (
                order is not None
                and order.ready_at <= state.step
                and order.material == state.carried.material
            )
            return MoveEffect.DELIVER if ok else None
        if cfg.is_crown(target) or target in state.grid:
            return None
        return MoveEffect.DROP_TO_STORAGE if target in reach.placeable else None


def _carried_deliverable(state: SimState) -> bool:
    return (
        state.carried is not None
        and state.ready_order_for(state.carried.material) is not None
    )


def _fetchable_delivery_exists(state: SimState) -> bool:
    """Some open ready order could be progressed by picking a matching box
    (pickable in storage or ready at an entry head)."""
    ready_mats = {o.material for o in state.open_ready_orders()}
    if not ready_mats:
        return False
    pickable = state.reachability.pickable
    for cell, box in state.grid.items():
        if box.material in ready_mats and cell in pickable:
            return True
    for _, head in state.ready_heads():
        if head.material in ready_mats:
            return True
    return False


def _entry_work_exists(state: SimState) -> bool:
    return bool(state.ready_heads())


def classify_action(state: SimState, action: Coord) -> ActionClass:
    """Classify one action.  The four classes partition the action space.

    A valid non-delivery action counts as idle when it ignores pending
    delivery work: while a delivery is executable every other action is
    idle; while a delivery is merely fetchable, only picking a box whose
    material is on an open ready order escapes the penalty; while items
    merely wait at entry points, collecting or storing escapes it.
    """
    effect = _move_effect(state, action)
    if effect is None:
        return ActionClass.INVALID
    if effect is MoveEffect.DELIVER:
        return ActionClass.DELIVERY

    if _carried_deliverable(state):
        return ActionClass.IDLE
    if _fetchable_delivery_exists(state):
        if effect in (MoveEffect.PICK_FROM_GRID, MoveEffect.PICK_FROM_ENTRY):
            picked_mat = (
                state.grid[action].material
                if effect is MoveEffect.PICK_FROM_GRID
                else state.head_item(action).material
            )
            if state.ready_order_for(picked_mat) is not None:
                return ActionClass.NEUTRAL
        return ActionClass.IDLE
    if _entry_work_exists(state):
        if effect in (MoveEffect.PICK_FROM_ENTRY, MoveEffect.DROP_TO_STORAGE):
            return ActionClass.NEUTRAL
        return ActionClass.IDLE
    return ActionClass.NEUTRAL


def reward(state: SimState, action: Coord) -> float:
    """R(s, a): invalid -1, idle -0.9, neutral 0, delivery in [-0.5, 0]
    scaled by how far the delivered box is from the oldest available one."""
    cls = classify_action(state, action)
    return _reward_for_class(state, cls)


def _reward_for_class(state: SimState, cls: ActionClass) -> float:
    if cls is ActionClass.INVALID:
        return -1.0
    if cls is ActionClass.IDLE:
        return -0.9
    if cls is ActionClass.DELIVERY:
        oldest = oldest_available_age(state)
        delivered = state.carried.age
        delta = 0 if oldest is None else max(0, oldest - delivered)
        delta = min(delta, state.cfg.age_diff_cap)
        # + 0.0 normalizes -0.0 so serialized rewards match across languages
        return -0.5 * delta / state.cfg.age_diff_cap + 0.0
    return 0.0


def valid_action_mask(state: SimState) -> np.ndarray:
    """Boolean vector over the flat action space; True where the action is
    anything but invalid."""
    cfg = state.cfg
    mask = np.zeros(cfg.action_count, dtype=bool)
    for idx in range(cfg.action_count):
        mask[idx] = _move_effect(state, flat_to_coord(idx, cfg.cols)) is not None
    return mask


def episode_return(rewards, gamma: float) -> float:
    """Discounted return; gamma=1 gives the plain evaluation score."""
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    total = 0.0
    factor = 1.0
    for r in rewards:
        total += factor * r
        factor *= gamma
    return total


class Env:
    """Episodic environment facade over a SimState."""

    def __init__(self, cfg: WarehouseConfig):
        self.cfg = cfg
        self.state: SimState | None = None
        self._done = True

    def reset(self, seed: int | None = None) -> np.ndarray:
        self.state = create_initial_state(self.cfg, seed)
        self._done = False
        return encode_state(self.state)

    @property
    def done(self) -> bool:
        return self._done

    def current_mask(self) -> np.ndarray:
        return valid_action_mask(self.state)

    def step(self, action: Coord | int) -> StepResult:
        if self.state is None or self._done:
            raise EpisodeDone("reset() the environment before stepping")
        cfg = self.cfg
        if isinstance(action, (int, np.integer)):
            action = flat_to_coord(int(action), cfg.cols)
        if not cfg.is_inside(action):
            raise ValueError(f"action {action} outside the {cfg.rows}x{cfg.cols} grid")
        state = self.state

        cls = classify_action(state, action)
        rew = _reward_for_class(state, cls)
        oldest_before = oldest_available_age(state)
        delivered_age = None
        fifo_baseline = None
        if cls is ActionClass.DELIVERY:
            delivered_age = state.carried.age
            fifo_baseline = oldest_material_age(state, state.carried.material)

        effect = None
        if cls is not ActionClass.INVALID:
            effect = apply_move(state, action)
        tick_generation(state)
        self._done = state.step >= cfg.max_steps_per_episode

        info = {
            "action_class": cls,
            "effect": effect,
            "delivered_box_age": delivered_age,
            "oldest_available_age": oldest_before,
            "fifo_baseline_age": fifo_baseline,
            "valid_action_mask": valid_action_mask(state),
        }
        return StepResult(encode_state(state), rew, self._done, info)
