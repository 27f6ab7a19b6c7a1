"""Environment configuration: parsing, validation, and defaults.

Configs are plain YAML documents (flat keys plus a ``materials`` block).
Every field is optional; unspecified fields fall back to the stock 6x6
two-material setting.  See CONFIG.md for the documented schema.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from pathlib import Path

import yaml

SCHEMA_VERSION = 1

Coord = tuple[int, int]


class ConfigError(ValueError):
    """Raised when a configuration document violates an invariant."""


@dataclass(frozen=True)
class MaterialSpec:
    """One material type.

    Materials are named with consecutive capital letters starting at 'A'
    and indexed 1-based (A -> 1, B -> 2, ...).  ``item_lambda`` is the mean
    number of steps until a queued item becomes ready at its entry point;
    ``order_lambda`` is the mean number of steps until an order of this
    material becomes collectible at its delivery point.  Both are Poisson
    parameters.
    """

    name: str
    item_lambda: float
    order_lambda: float


@dataclass(frozen=True)
class WarehouseConfig:
    """Full environment parameterization.

    ``rows`` and ``cols`` describe the whole grid including the one-cell
    outer crown, so the storage interior is (rows-2) x (cols-2).  Entry and
    delivery points must sit on the crown.
    """

    rows: int = 6
    cols: int = 6
    entry_points: tuple[Coord, ...] = ((0, 1), (0, 4))
    delivery_points: tuple[Coord, ...] = ((5, 1), (5, 4))
    materials: tuple[MaterialSpec, ...] = (
        MaterialSpec("A", 5.0, 30.0),
        MaterialSpec("B", 10.0, 50.0),
    )
    order_size_min: int = 2
    order_size_max: int = 6
    new_order_lambda: float = 25.0
    max_steps_per_episode: int = 1000
    age_cap: int = 1000
    age_diff_cap: int = 100
    seed: int = 0

    @property
    def num_materials(self) -> int:
        return len(self.materials)

    @property
    def num_planes(self) -> int:
        """Observation depth: six fixed feature planes plus one per material."""
        return 6 + len(self.materials)

    @property
    def action_count(self) -> int:
        return self.rows * self.cols

    def is_inside(self, cell: Coord) -> bool:
        r, c = cell
        return 0 <= r < self.rows and 0 <= c < self.cols

    def is_crown(self, cell: Coord) -> bool:
        r, c = cell
        return self.is_inside(cell) and (
            r == 0 or r == self.rows - 1 or c == 0 or c == self.cols - 1
        )

    def is_interior(self, cell: Coord) -> bool:
        return self.is_inside(cell) and not self.is_crown(cell)

    def interior_cells(self) -> list[Coord]:
        return [
            (r, c)
            for r in range(1, self.rows - 1)
            for c in range(1, self.cols - 1)
        ]

    def crown_cells(self) -> list[Coord]:
        return [
            (r, c)
            for r in range(self.rows)
            for c in range(self.cols)
            if self.is_crown((r, c))
        ]

    def material_index(self, name: str) -> int:
        for i, spec in enumerate(self.materials):
            if spec.name == name:
                return i + 1
        raise KeyError(name)


def default_config() -> WarehouseConfig:
    """The stock 6x6 setting: two materials, entry points on the upper crown
    edge, delivery points on the lower one, orders of 2-6 items."""
    return WarehouseConfig()


def default_points(rows: int, cols: int) -> tuple[tuple[Coord, ...], tuple[Coord, ...]]:
    """Default entry/delivery placement: the crown cells next to the upper
    and lower corners, so every point is adjacent to the storage interior."""
    entries = ((0, 1), (0, cols - 2))
    deliveries = ((rows - 1, 1), (rows - 1, cols - 2))
    return entries, deliveries


def validate(cfg: WarehouseConfig) -> WarehouseConfig:
    """Check every config invariant; raise ConfigError naming the first
    violated one.  Returns the config unchanged for chaining."""
    if cfg.rows < 4 or cfg.cols < 4:
        raise ConfigError(
            f"grid must be at least 4x4 so the storage interior is nonempty, "
            f"got {cfg.rows}x{cfg.cols}"
        )
    if not cfg.entry_points:
        raise ConfigError("at least one entry point is required")
    if not cfg.delivery_points:
        raise ConfigError("at least one delivery point is required")
    seen: set[Coord] = set()
    for kind, points in (("entry", cfg.entry_points), ("delivery", cfg.delivery_points)):
        for p in points:
            if not cfg.is_inside(p):
                raise ConfigError(f"{kind} point {p} is outside the grid")
            if not cfg.is_crown(p):
                raise ConfigError(
                    f"{kind} point {p} is not on the outer crown"
                )
            if p in seen:
                raise ConfigError(f"point {p} is used more than once")
            seen.add(p)
    if not cfg.materials:
        raise ConfigError("at least one material is required")
    for i, spec in enumerate(cfg.materials):
        expected = string.ascii_uppercase[i]
        if spec.name != expected:
            raise ConfigError(
                f"material #{i + 1} must be named {expected!r} "
                f"(consecutive letters from 'A'), got {spec.name!r}"
            )
        if spec.item_lambda <= 0:
            raise ConfigError(f"material {spec.name}: item_lambda must be > 0")
        if spec.order_lambda <= 0:
            raise ConfigError(f"material {spec.name}: order_lambda must be > 0")
    if cfg.order_size_min < 1:
        raise ConfigError("order_size_min must be >= 1")
    if cfg.order_size_min > cfg.order_size_max:
        raise ConfigError(
            f"order_size_min ({cfg.order_size_min}) exceeds "
            f"order_size_max ({cfg.order_size_max})"
        )
    if cfg.new_order_lambda <= 0:
        raise ConfigError("new_order_lambda must be > 0")
    if cfg.max_steps_per_episode < 1:
        raise ConfigError("max_steps_per_episode must be >= 1")
    if cfg.age_cap <= 0:
        raise ConfigError("age_cap must be > 0")
    if cfg.age_diff_cap <= 0:
        raise ConfigError("age_diff_cap must be > 0")
    return cfg


def _as_coord(value, label: str) -> Coord:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) for v in value)
    ):
        raise ConfigError(f"{label} must be a [row, col] pair of integers, got {value!r}")
    return (value[0], value[1])


def load_config(text: str) -> WarehouseConfig:
    """Parse a YAML configuration document into a validated WarehouseConfig.

    Unknown keys are rejected so typos fail loudly.  Missing keys take the
    stock defaults; when the grid size is changed without explicit points,
    the points move to the default crown positions for that size.
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config document: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a mapping at the top level")

    known = {
        "schema_version", "rows", "cols", "entry_points", "delivery_points",
        "materials", "order_size_min", "order_size_max", "new_order_lambda",
        "max_steps_per_episode", "age_cap", "age_diff_cap", "seed",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")

    base = default_config()
    rows = raw.get("rows", base.rows)
    cols = raw.get("cols", base.cols)
    if not isinstance(rows, int) or not isinstance(cols, int):
        raise ConfigError("rows and cols must be integers")

    if "entry_points" in raw:
        entries = tuple(_as_coord(p, "entry point") for p in raw["entry_points"])
    elif (rows, cols) == (base.rows, base.cols):
        entries = base.entry_points
    else:
        entries = default_points(rows, cols)[0]
    if "delivery_points" in raw:
        deliveries = tuple(_as_coord(p, "delivery point") for p in raw["delivery_points"])
    elif (rows, cols) == (base.rows, base.cols):
        deliveries = base.delivery_points
    else:
        deliveries = default_points(rows, cols)[1]

    if "materials" in raw:
        mats = []
        if not isinstance(raw["materials"], list):
            raise ConfigError("materials must be a list of blocks")
        for block in raw["materials"]:
            if not isinstance(block, dict):
                raise ConfigError("each material must be a mapping")
            extra = set(block) - {"name", "item_lambda", "order_lambda"}
            if extra:
                raise ConfigError(f"unknown material keys: {sorted(extra)}")
            try:
                mats.append(
                    MaterialSpec(
                        name=str(block["name"]),
                        item_lambda=float(block["item_lambda"]),
                        order_lambda=float(block["order_lambda"]),
                    )
                )
            except KeyError as exc:
                raise ConfigError(f"material block missing key {exc}") from exc
        materials = tuple(mats)
    else:
        materials = base.materials

    cfg = WarehouseConfig(
        rows=rows,
        cols=cols,
        entry_points=entries,
        delivery_points=deliveries,
        materials=materials,
        order_size_min=int(raw.get("order_size_min", base.order_size_min)),
        order_size_max=int(raw.get("order_size_max", base.order_size_max)),
        new_order_lambda=float(raw.get("new_order_lambda", base.new_order_lambda)),
        max_steps_per_episode=int(raw.get("max_steps_per_episode", base.max_steps_per_episode)),
        age_cap=int(raw.get("age_cap", base.age_cap)),
        age_diff_cap=int(raw.get("age_diff_cap", base.age_diff_cap)),
        seed=int(raw.get("seed", base.seed)),
    )
    return validate(cfg)


def load_config_file(path: str | Path) -> WarehouseConfig:
    return load_config(Path(path).read_text(encoding="utf-8"))


def serialize_config(cfg: WarehouseConfig) -> str:
    """Emit a YAML document that load_config() parses back to an equal config."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "rows": cfg.rows,
        "cols": cfg.cols,
        "entry_points": [list(p) for p in cfg.entry_points],
        "delivery_points": [list(p) for p in cfg.delivery_points],
        "materials": [
            {"name": m.name, "item_lambda": m.item_lambda, "order_lambda": m.order_lambda}
            for m in cfg.materials
        ],
        "order_size_min": cfg.order_size_min,
        "order_size_max": cfg.order_size_max,
        "new_order_lambda": cfg.new_order_lambda,
        "max_steps_per_episode": cfg.max_steps_per_episode,
        "age_cap": cfg.age_cap,
        "age_diff_cap": cfg.age_diff_cap,
        "seed": cfg.seed,
    }
    return yaml.safe_dump(doc, sort_keys=False)


def desk_config(seed: int = 0) -> WarehouseConfig:
    """A small fast-turnover setting for laptop-scale training runs: one
    material, quick generation, short episodes."""
    cfg = WarehouseConfig(
        materials=(MaterialSpec("A", 3.0, 8.0),),
        order_size_min=1,
        order_size_max=2,
        new_order_lambda=16.0,
        max_steps_per_episode=250,
        seed=seed,
    )
    return validate(cfg)
