"""Seedable warehouse-management simulation for reinforcement learning."""

from .config import (
    ConfigError,
    MaterialSpec,
    WarehouseConfig,
    default_config,
    desk_config,
    load_config,
    load_config_file,
    serialize_config,
)
from .mdp import ActionClass, Env, StepResult, episode_return
from .metrics import EpisodeMetrics, aggregate

__version__ = "0.1.0"

__all__ = [
    "ActionClass",
    "ConfigError",
    "Env",
    "EpisodeMetrics",
    "MaterialSpec",
    "StepResult",
    "WarehouseConfig",
    "aggregate",
    "default_config",
    "desk_config",
    "episode_return",
    "load_config",
    "load_config_file",
    "serialize_config",
    "__version__",
]
