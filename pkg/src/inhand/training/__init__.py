from .rollout import RolloutBuffer, collect_rollout, compute_gae
from .ppo import ppo_update, train_base, UpdateStats, VARIANT_KIND
from .adapt import train_adaptation, adaptation_holdout

__all__ = [
    "RolloutBuffer",
    "collect_rollout",
    "compute_gae",
    "ppo_update",
    "train_base",
    "UpdateStats",
    "VARIANT_KIND",
    "train_adaptation",
    "adaptation_holdout",
]
