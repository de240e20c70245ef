"""
Augmentation Module - N-fold rotational augmentation and the Gaussian-noise baseline
"""
from typing import Optional, Tuple
import logging

import numpy as np

from src.dataset.episodes import Episode, EpisodeDataset
from src.exceptions import DomainError, SchemaError
from src.symaug.schema import SymmetrySchema

logger = logging.getLogger(__name__)

DEFAULT_NOISE_VARIANCE = 3e-4


def rotation_matrix(k: int, order: int) -> np.ndarray:
    """Counter-clockwise rotation by k * 360/order degrees, viewed top-down"""
    theta = 2.0 * np.pi * k / order
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _rotate_pairs(values: np.ndarray, pairs: np.ndarray, rot: np.ndarray) -> None:
    if len(pairs) == 0:
        return
    x = values[:, pairs[:, 0]].copy()
    y = values[:, pairs[:, 1]].copy()
    values[:, pairs[:, 0]] = rot[0, 0] * x + rot[0, 1] * y
    values[:, pairs[:, 1]] = rot[1, 0] * x + rot[1, 1] * y


def rotate_batch(states: np.ndarray, actions: np.ndarray, k: int,
                 schema: SymmetrySchema) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rotate rows of (state, action) by k steps of the schema's symmetry group

    Finger slot alpha receives the content of slot (alpha + k) mod N for both
    states and actions; every rotatable (x, y) pair is then multiplied by the
    rotation matrix of angle k * 360/N; invariant indices are copied.

    Args:
        states: (M, state_dim) array
        actions: (M, action_dim) array
        k: Group element in [0, N)
        schema: Symmetry schema matching the widths

    Returns:
        (states', actions') as float64 arrays
    """
    if not (0 <= k < schema.order):
        raise DomainError(f"k must be in [0, {schema.order}), got {k}")
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    actions = np.atleast_2d(np.asarray(actions, dtype=np.float64))
    schema.validate_for(states.shape[1], actions.shape[1])

    out_states = states[:, schema.state_source_indices(k)]
    out_actions = actions[:, schema.action_source_indices(k)]
    if k != 0:
        rot = rotation_matrix(k, schema.order)
        _rotate_pairs(out_states, schema.state_xy_pairs(), rot)
        _rotate_pairs(out_actions, schema.action_xy_pairs(), rot)
    return out_states, out_actions


def rotate_sample(state: np.ndarray, action: np.ndarray, k: int,
                  schema: SymmetrySchema) -> Tuple[np.ndarray, np.ndarray]:
    """Single-sample form of rotate_batch"""
    states, actions = rotate_batch(np.reshape(state, (1, -1)), np.reshape(action, (1, -1)), k, schema)
    return states[0], actions[0]


def augment_dataset(ds: EpisodeDataset, schema: SymmetrySchema) -> EpisodeDataset:
    """
    Grow a dataset N-fold by rotating every episode

    Episode (orig_id, k) gets id orig_id * N + k; k = 0 is the untouched
    original. Rewards and labels are copied verbatim since rewards depend
    only on rotation-invariant distances.

    Args:
        ds: Input dataset
        schema: Symmetry schema for the dataset's dims

    Returns:
        Dataset with N * n_episodes episodes
    """
    try:
        schema.validate_for(ds.state_dim, ds.action_dim)
    except SchemaError:
        logger.error(f"Schema does not fit dataset dims ({ds.state_dim}, {ds.action_dim})")
        raise

    n = schema.order
    episodes = []
    for ep in ds.episodes:
        for k in range(n):
            if k == 0:
                states, actions = ep.states, ep.actions
            else:
                states, actions = rotate_batch(ep.states, ep.actions, k, schema)
            episodes.append(Episode(
                episode_id=ep.episode_id * n + k,
                label=ep.label,
                states=states,
                actions=actions,
                rewards=ep.rewards,
            ))

    logger.info(f"Rotational augmentation: {ds.n_episodes} -> {len(episodes)} episodes (N={n})")
    return ds.replace_episodes(episodes)


def gaussian_augment(ds: EpisodeDataset, sigma: float = DEFAULT_NOISE_VARIANCE,
                     rng: Optional[np.random.Generator] = None) -> EpisodeDataset:
    """
    Noise baseline: append a copy of every episode with perturbed states

    Args:
        ds: Input dataset
        sigma: Noise variance (the standard deviation is sqrt(sigma))
        rng: Random generator; a fresh default_rng(0) when omitted

    Returns:
        Dataset of 2 * n_episodes: originals (id * 2) followed by noisy copies
        (id * 2 + 1); actions and rewards unchanged
    """
    if sigma < 0 or not np.isfinite(sigma):
        raise DomainError(f"sigma must be a non-negative variance, got {sigma}")
    rng = rng if rng is not None else np.random.default_rng(0)
    std = float(np.sqrt(sigma))

    originals = [ep.with_id(ep.episode_id * 2) for ep in ds.episodes]
    noisy = []
    for ep in ds.episodes:
        noise = rng.normal(0.0, std, size=ep.states.shape) if std > 0 else np.zeros(ep.states.shape)
        noisy.append(Episode(
            episode_id=ep.episode_id * 2 + 1,
            label=ep.label,
            states=ep.states.astype(np.float64) + noise,
            actions=ep.actions,
            rewards=ep.rewards,
        ))

    logger.info(f"Gaussian augmentation (variance {sigma}): {ds.n_episodes} -> {2 * ds.n_episodes} episodes")
    return ds.replace_episodes(originals + noisy)
