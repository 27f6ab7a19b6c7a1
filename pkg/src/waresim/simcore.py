"""Ground-truth world dynamics.

A SimState owns the grid occupancy, box ages, per-entry-point queues, open
orders, and the seeded random generator that drives order/item generation.
Everything here is deterministic given the seed: the generator is Python's
Mersenne Twister (``random.Random``) and Poisson draws use Knuth's
multiplication method on top of it, so two runs with the same seed produce
bit-identical trajectories.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .config import Coord, WarehouseConfig


class InvalidMoveError(RuntimeError):
    """apply_move() was called with a target that is not a legal move."""


class MoveEffect(Enum):
    PICK_FROM_GRID = "pick_from_grid"
    PICK_FROM_ENTRY = "pick_from_entry"
    DROP_TO_STORAGE = "drop_to_storage"
    DELIVER = "deliver"
    NEUTRAL = "neutral"


@dataclass
class Box:
    """A unit of material.  Age counts steps since the item became ready at
    its entry point and only ever increases."""

    material: int
    age: int
    id: int


@dataclass
class Order:
    """A demand originated at a delivery point.  The point starts consuming
    matching boxes once the current step reaches ``ready_at``."""

    id: int
    material: int
    quantity: int
    delivery_point: Coord
    remaining: int
    ready_at: int


@dataclass
class EntryQueueItem:
    """One queued incoming item.  Ready (and aging) once step >= ready_at;
    consumed strictly in sequence order."""

    material: int
    ready_at: int
    sequence: int
    counted: bool = False  # becomes True once tallied into boxes_created


@dataclass(frozen=True)
class ReachabilityMap:
    """Per-cell accessibility flags, a pure function of grid occupancy.

    ``placeable``: empty interior cells reachable from the crown through
    empty cells (4-connected).  ``pickable``: boxed cells with a reachable
    empty 4-neighbour.  ``restricted``: every other interior cell.
    """

    placeable: frozenset[Coord]
    pickable: frozenset[Coord]
    restricted: frozenset[Coord]


def sample_poisson(lam: float, rng: random.Random) -> int:
    """Draw a Poisson(lam) integer using Knuth's product-of-uniforms method.

    Large lambdas are split additively (Poisson is closed under addition)
    to keep exp(-lam) away from underflow.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    total = 0
    while lam > 500:
        total += sample_poisson(500, rng)
        lam -= 500
    threshold = math.exp(-lam)
    k = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= threshold:
            return total + k
        k += 1


def compute_reachability(grid: dict[Coord, Box], cfg: WarehouseConfig) -> ReachabilityMap:
    """Flood-fill from every crown cell over empty cells (4-connectivity)."""
    reached: set[Coord] = set()
    frontier = deque()
    for cell in cfg.crown_cells():
        if cell not in grid:  # crown cells never hold boxes, but stay safe
            reached.add(cell)
            frontier.append(cell)
    while frontier:
        r, c = frontier.popleft()
        for nb in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if nb in reached or not cfg.is_inside(nb) or nb in grid:
                continue
            reached.add(nb)
            frontier.append(nb)

    placeable = set()
    pickable = set()
    restricted = set()
    for cell in cfg.interior_cells():
        if cell in grid:
            r, c = cell
            if any(
                nb in reached
                for nb in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1))
            ):
                pickable.add(cell)
            else:
                restricted.add(cell)
        elif cell in reached:
            placeable.add(cell)
        else:
            restricted.add(cell)
    return ReachabilityMap(frozenset(placeable), frozenset(pickable), frozenset(restricted))


@dataclass
class DeliveryRecord:
    step: int
    material: int
    delivered_age: int
    oldest_available_age: int | None
    fifo_baseline_age: int | None


@dataclass
class SimState:
    """Mutable world state owned by one environment instance."""

    cfg: WarehouseConfig
    rng: random.Random
    step: int = 0
    grid: dict[Coord, Box] = field(default_factory=dict)
    agent_pos: Coord = (0, 0)
    carried: Box | None = None
    queues: dict[Coord, deque[EntryQueueItem]] = field(default_factory=dict)
    open_orders: list[Order] = field(default_factory=list)
    pending_order_timer: int = 0
    delivered_log: list[DeliveryRecord] = field(default_factory=list)
    boxes_created: int = 0
    boxes_delivered: int = 0
    _next_sequence: int = 0
    _next_order_id: int = 0
    _order_point_cursor: int = 0
    _entry_point_cursor: int = 0
    _reach: ReachabilityMap | None = None

    @property
    def reachability(self) -> ReachabilityMap:
        if self._reach is None:
            self._reach = compute_reachability(self.grid, self.cfg)
        return self._reach

    def invalidate_reachability(self) -> None:
        self._reach = None

    # -- queue views ------------------------------------------------------

    def head_item(self, entry: Coord) -> EntryQueueItem | None:
        q = self.queues[entry]
        return q[0] if q else None

    def head_ready(self, entry: Coord) -> bool:
        head = self.head_item(entry)
        return head is not None and head.ready_at <= self.step

    def ready_heads(self) -> list[tuple[Coord, EntryQueueItem]]:
        out = []
        for entry in self.cfg.entry_points:
            head = self.head_item(entry)
            if head is not None and head.ready_at <= self.step:
                out.append((entry, head))
        return out

    def item_age(self, item: EntryQueueItem) -> int:
        return max(0, self.step - item.ready_at)

    # -- order views ------------------------------------------------------

    def open_ready_orders(self) -> list[Order]:
        return [o for o in self.open_orders if o.ready_at <= self.step]

    def order_at(self, point: Coord) -> Order | None:
        for o in self.open_orders:
            if o.delivery_point == point:
                return o
        return None

    def ready_order_for(self, material: int) -> Order | None:
        """Lowest-id open, ready order expecting the given material."""
        best = None
        for o in self.open_orders:
            if o.material == material and o.ready_at <= self.step:
                if best is None or o.id < best.id:
                    best = o
        return best


def create_initial_state(cfg: WarehouseConfig, seed: int | None = None) -> SimState:
    """Fresh world at step 0: empty grid, agent parked at the first entry
    point, first order timer sampled."""
    rng = random.Random(cfg.seed if seed is None else seed)
    state = SimState(cfg=cfg, rng=rng, agent_pos=cfg.entry_points[0])
    state.queues = {p: deque() for p in cfg.entry_points}
    state.pending_order_timer = sample_poisson(cfg.new_order_lambda, rng)
    return state


def _materialize_ready_items(state: SimState) -> None:
    for q in state.queues.values():
        for item in q:
            if not item.counted and item.ready_at <= state.step:
                item.counted = True
                state.boxes_created += 1


def _create_order(state: SimState) -> Order | None:
    """Round-robin an order onto a delivery point without one; enqueue its
    items round-robin across entry points.  Returns None when every point
    already has an open order (creation retries next tick)."""
    cfg = state.cfg
    n_points = len(cfg.delivery_points)
    point = None
    for k in range(n_points):
        candidate = cfg.delivery_points[(state._order_point_cursor + k) % n_points]
        if state.order_at(candidate) is None:
            point = candidate
            state._order_point_cursor = (state._order_point_cursor + k + 1) % n_points
            break
    if point is None:
        return None

    mat_idx = state.rng.randrange(cfg.num_materials) + 1
    spec = cfg.materials[mat_idx - 1]
    quantity = state.rng.randint(cfg.order_size_min, cfg.order_size_max)
    order = Order(
        id=state._next_order_id,
        material=mat_idx,
        quantity=quantity,
        delivery_point=point,
        remaining=quantity,
        ready_at=state.step + sample_poisson(spec.order_lambda, state.rng),
    )
    state._next_order_id += 1
    state.open_orders.append(order)

    n_entries = len(cfg.entry_points)
    for _ in range(quantity):
        entry = cfg.entry_points[state._entry_point_cursor % n_entries]
        state._entry_point_cursor += 1
        state.queues[entry].append(
            EntryQueueItem(
                material=mat_idx,
                ready_at=state.step + sample_poisson(spec.item_lambda, state.rng),
                sequence=state._next_sequence,
            )
        )
        state._next_sequence += 1
    return order


def tick_generation(state: SimState) -> SimState:
    """Advance one step of the generation processes: age every box, run the
    order-creation timer, and materialize newly ready queue items."""
    state.step += 1
    for box in state.grid.values():
        box.age += 1
    if state.carried is not None:
        state.carried.age += 1

    if state.pending_order_timer <= 0:
        if _create_order(state) is not None:
            state.pending_order_timer = sample_poisson(state.cfg.new_order_lambda, state.rng)
        # else: every delivery point is busy; retry next tick
    else:
        state.pending_order_timer -= 1

    _materialize_ready_items(state)
    return state


def oldest_available_age(state: SimState) -> int | None:
    """Max age over boxes the agent could take right now: pickable grid
    boxes and ready entry-queue heads.  Restricted boxes are excluded."""
    best: int | None = None
    pickable = state.reachability.pickable
    for cell, box in state.grid.items():
        if cell in pickable and (best is None or box.age > best):
            best = box.age
    for _, head in state.ready_heads():
        age = state.item_age(head)
        if best is None or age > best:
            best = age
    return best


def oldest_material_age(state: SimState, material: int) -> int | None:
    """Max age over stored boxes of one material, restricted cells included.
    This is the baseline the FIFO-violation metric compares deliveries
    against: the criterion is scoped to inventory that has entered storage,
    so items still queued at the dock do not count."""
    best: int | None = None
    for box in state.grid.values():
        if box.material == material and (best is None or box.age > best):
            best = box.age
    return best


def apply_move(state: SimState, target: Coord) -> MoveEffect:
    """Teleport the agent to ``target`` and apply the pick/drop/deliver
    effect the cell implies.  Raises InvalidMoveError if the move is not
    legal; callers classify actions first and never pass invalid ones.
    """
    cfg = state.cfg
    if not cfg.is_inside(target):
        raise InvalidMoveError(f"target {target} outside grid")
    reach = state.reachability
    effect = MoveEffect.NEUTRAL

    if state.carried is None:
        if target in cfg.entry_points:
            if not state.head_ready(target):
                raise InvalidMoveError(f"entry point {target} has no ready item")
            item = state.queues[target].popleft()
            state.carried = Box(
                material=item.material,
                age=state.item_age(item),
                id=item.sequence,
            )
            effect = MoveEffect.PICK_FROM_ENTRY
        elif target in cfg.delivery_points:
            raise InvalidMoveError("cannot visit a delivery point empty-handed")
        elif target in state.grid:
            if target not in reach.pickable:
                raise InvalidMoveError(f"box at {target} is restricted")
            state.carried = state.grid.pop(target)
            state.invalidate_reachability()
            effect = MoveEffect.PICK_FROM_GRID
        elif cfg.is_interior(target) and target not in reach.placeable:
            raise InvalidMoveError(f"cell {target} is restricted")
    else:
        if target in cfg.delivery_points:
            order = state.order_at(target)
            if (
                order is None
                or order.ready_at > state.step
                or order.material != state.carried.material
            ):
                raise InvalidMoveError(f"delivery point {target} does not accept this box")
            box = state.carried
            state.carried = None
            order.remaining -= 1
            if order.remaining == 0:
                state.open_orders.remove(order)
            state.delivered_log.append(
                DeliveryRecord(
                    step=state.step,
                    material=box.material,
                    delivered_age=box.age,
                    oldest_available_age=oldest_available_age(state),
                    fifo_baseline_age=oldest_material_age(state, box.material),
                )
            )
            state.boxes_delivered += 1
            effect = MoveEffect.DELIVER
        elif cfg.is_crown(target):
            raise InvalidMoveError("cannot drop a box on the crown")
        elif target in state.grid:
            raise InvalidMoveError("cannot stack boxes")
        else:
            if target not in reach.placeable:
                raise InvalidMoveError(f"cell {target} is restricted")
            state.grid[target] = state.carried
            state.carried = None
            state.invalidate_reachability()
            effect = MoveEffect.DROP_TO_STORAGE

    state.agent_pos = target
    return effect


def boxes_in_warehouse(state: SimState) -> list[Box]:
    """Every materialized box: on the grid, carried, or ready in a queue."""
    boxes = list(state.grid.values())
    if state.carried is not None:
        boxes.append(state.carried)
    for q in state.queues.values():
        for item in q:
            if item.ready_at <= state.step:
                boxes.append(Box(item.material, state.item_age(item), item.sequence))
    return boxes


def conservation_holds(state: SimState) -> bool:
    """Created boxes must equal grid + carried + ready-in-queue + delivered."""
    ready_queued = sum(
        1
        for q in state.queues.values()
        for item in q
        if item.ready_at <= state.step
    )
    on_hand = len(state.grid) + (1 if state.carried is not None else 0)
    return state.boxes_created == on_hand + ready_queued + state.boxes_delivered
