"""Synthetic 3-fold-symmetric push environment and labeled dataset generation"""
from src.synthenv.env import EnvParams, EnvState, push_schema, reset, rollout, step
from src.synthenv.generator import DatasetKind, generate_dataset, run_episode
from src.synthenv.policies import WeakKind, expert_policy, random_policy, weak_policy

__all__ = [
    "DatasetKind",
    "EnvParams",
    "EnvState",
    "WeakKind",
    "expert_policy",
    "generate_dataset",
    "push_schema",
    "random_policy",
    "reset",
    "rollout",
    "run_episode",
    "step",
    "weak_policy",
]
