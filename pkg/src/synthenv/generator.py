"""
Dataset Generator Module - Labeled expert and mixed datasets from the push environment
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Set
import logging

import numpy as np

from config import get_settings
from src.dataset.episodes import Episode, EpisodeDataset, EpisodeLabel
from src.exceptions import DomainError
from src.seeding import make_rng
from src.synthenv.env import ACTION_DIM, STATE_DIM, EnvParams, EnvState, clamp_action, reset, step
from src.synthenv.policies import PolicyFn, WeakKind, expert_policy, weak_policy_for

logger = logging.getLogger(__name__)

EXPERT_SHARE = 0.6


class DatasetKind(str, Enum):
    EXPERT = "expert"
    MIXED = "mixed"


@dataclass(frozen=True, eq=False)
class EpisodeArrays:
    """Float64 record of one simulated episode, before storage rounding"""

    initial: EnvState
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray


def run_episode(policy: PolicyFn, params: EnvParams, rng: np.random.Generator,
                initial: Optional[EnvState] = None) -> EpisodeArrays:
    """
    Roll a scripted policy for params.episode_len steps

    The recorded action is the clamped command the environment applies.
    """
    state = initial if initial is not None else reset(params, rng)
    start = state
    T = params.episode_len
    states = np.zeros((T, STATE_DIM))
    actions = np.zeros((T, ACTION_DIM))
    rewards = np.zeros(T)
    for t in range(T):
        states[t] = state.to_vector()
        actions[t] = clamp_action(policy(state, params, rng), params)
        state, rewards[t] = step(state, actions[t], params)
    return EpisodeArrays(start, states, actions, rewards)


def expert_ids_for(kind: DatasetKind, n_episodes: int, seed: int) -> Set[int]:
    """Which episode ids come from the expert (60% of a mixed dataset, chosen at random)"""
    if DatasetKind(kind) == DatasetKind.EXPERT:
        return set(range(n_episodes))
    n_expert = int(round(EXPERT_SHARE * n_episodes))
    order = make_rng(seed, "gen", "composition").permutation(n_episodes)
    return {int(i) for i in order[:n_expert]}


def generate_dataset(kind: DatasetKind, n_episodes: int, params: EnvParams,
                     weak: WeakKind = WeakKind.PARTIAL,
                     threads: Optional[int] = None) -> EpisodeDataset:
    """
    Generate a labeled dataset

    Args:
        kind: EXPERT (every episode from the expert) or MIXED (60/40 expert/weak)
        n_episodes: Number of episodes (>= 1)
        params: Environment parameters; params.rng_seed drives everything
        weak: Behaviour of the weak share (PARTIAL or RANDOM)
        threads: Worker count; defaults to OPL_THREADS

    Returns:
        EpisodeDataset with ground-truth labels, bit-identical for equal inputs
    """
    if n_episodes < 1:
        raise DomainError(f"n_episodes must be >= 1, got {n_episodes}")
    kind = DatasetKind(kind)
    weak_fn = weak_policy_for(WeakKind(weak))
    seed = params.rng_seed
    expert_ids = expert_ids_for(kind, n_episodes, seed)
    workers = threads or get_settings().threads

    logger.info(
        f"Generating {kind.value} dataset: {n_episodes} episodes x {params.episode_len} steps "
        f"(seed {seed}, weak={WeakKind(weak).value}, {len(expert_ids)} expert)"
    )

    def build(episode_id: int) -> Episode:
        is_expert = episode_id in expert_ids
        rng = make_rng(seed, "gen", episode_id)
        arrays = run_episode(expert_policy if is_expert else weak_fn, params, rng)
        return Episode(
            episode_id=episode_id,
            label=EpisodeLabel.EXPERT if is_expert else EpisodeLabel.WEAK,
            states=arrays.states,
            actions=arrays.actions,
            rewards=arrays.rewards,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            episodes = list(executor.map(build, range(n_episodes)))
    else:
        episodes = [build(i) for i in range(n_episodes)]

    ds = EpisodeDataset(STATE_DIM, ACTION_DIM, params.episode_len, tuple(episodes))
    returns = ds.returns()
    logger.info(f"Generated dataset mean return {returns.mean():.2f} (min {returns.min():.2f}, max {returns.max():.2f})")
    return ds
