"""
Episode Data Model - Fixed-length episodes, returns, reward ranking and histograms
"""
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Dict, Iterable, Iterator, List, Sequence, Set, Tuple
import logging

import numpy as np

from src.exceptions import DomainError, ShapeError

logger = logging.getLogger(__name__)


class EpisodeLabel(IntEnum):
    """Ground-truth source of an episode (byte values of the .opld format)"""

    UNKNOWN = -1
    WEAK = 0
    EXPERT = 1


@dataclass(frozen=True)
class Transition:
    """One (s_t, a_t, r_t) step; s_{t+1} is the next step's state"""

    state: np.ndarray
    action: np.ndarray
    reward: float


def _frozen(array: np.ndarray, dtype=np.float32) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Episode:
    """A fixed-length trajectory stored as column arrays"""

    episode_id: int
    label: EpisodeLabel
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray

    def __post_init__(self):
        states = _frozen(self.states)
        actions = _frozen(self.actions)
        rewards = _frozen(np.reshape(self.rewards, -1))
        if states.ndim != 2 or actions.ndim != 2:
            raise ShapeError(f"episode {self.episode_id}: states and actions must be 2-D")
        if not (len(states) == len(actions) == len(rewards)):
            raise ShapeError(
                f"episode {self.episode_id}: {len(states)} states, {len(actions)} actions, "
                f"{len(rewards)} rewards"
            )
        for name, arr in (("states", states), ("actions", actions), ("rewards", rewards)):
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"episode {self.episode_id}: non-finite {name}")
        if self.episode_id < 0:
            raise DomainError(f"episode_id must be unsigned, got {self.episode_id}")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "label", EpisodeLabel(self.label))

    def __len__(self) -> int:
        return len(self.rewards)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Episode):
            return NotImplemented
        return (
            self.episode_id == other.episode_id
            and self.label == other.label
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.actions, other.actions)
            and np.array_equal(self.rewards, other.rewards)
        )

    __hash__ = None

    @property
    def steps(self) -> List[Transition]:
        return list(self.transitions())

    def transitions(self) -> Iterator[Transition]:
        for s, a, r in zip(self.states, self.actions, self.rewards):
            yield Transition(state=s, action=a, reward=float(r))

    def with_label(self, label: EpisodeLabel) -> "Episode":
        return replace(self, label=label)

    def with_id(self, episode_id: int) -> "Episode":
        return replace(self, episode_id=episode_id)


@dataclass(frozen=True, eq=False)
class EpisodeDataset:
    """
    Immutable ordered collection of equal-length episodes

    Safe to share read-only between workers; every array is write-protected.
    """

    state_dim: int
    action_dim: int
    episode_len: int
    episodes: Tuple[Episode, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for name in ("state_dim", "action_dim", "episode_len"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1, got {getattr(self, name)}")
        episodes = tuple(self.episodes)
        seen: Set[int] = set()
        for ep in episodes:
            if ep.episode_id in seen:
                raise DomainError(f"duplicate episode_id {ep.episode_id}")
            seen.add(ep.episode_id)
            if len(ep) != self.episode_len:
                raise ShapeError(
                    f"episode {ep.episode_id} has {len(ep)} steps, dataset episode_len is {self.episode_len}"
                )
            if ep.states.shape[1] != self.state_dim or ep.actions.shape[1] != self.action_dim:
                raise ShapeError(
                    f"episode {ep.episode_id} dims ({ep.states.shape[1]}, {ep.actions.shape[1]}) "
                    f"do not match dataset dims ({self.state_dim}, {self.action_dim})"
                )
        object.__setattr__(self, "episodes", episodes)

    def __len__(self) -> int:
        return len(self.episodes)

    def __iter__(self) -> Iterator[Episode]:
        return iter(self.episodes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EpisodeDataset):
            return NotImplemented
        return (
            self.state_dim == other.state_dim
            and self.action_dim == other.action_dim
            and self.episode_len == other.episode_len
            and len(self.episodes) == len(other.episodes)
            and all(a == b for a, b in zip(self.episodes, other.episodes))
        )

    __hash__ = None

    @property
    def n_episodes(self) -> int:
        return len(self.episodes)

    @property
    def episode_ids(self) -> List[int]:
        return [ep.episode_id for ep in self.episodes]

    def by_id(self, episode_id: int) -> Episode:
        for ep in self.episodes:
            if ep.episode_id == episode_id:
                return ep
        raise KeyError(episode_id)

    def subset(self, ids: Iterable[int]) -> "EpisodeDataset":
        """Episodes whose id is in ids, in dataset order"""
        wanted = set(ids)
        return self.replace_episodes([ep for ep in self.episodes if ep.episode_id in wanted])

    def replace_episodes(self, episodes: Sequence[Episode]) -> "EpisodeDataset":
        return EpisodeDataset(self.state_dim, self.action_dim, self.episode_len, tuple(episodes))

    def has_labels(self) -> bool:
        """True when every episode carries a ground-truth label"""
        return len(self.episodes) > 0 and all(ep.label != EpisodeLabel.UNKNOWN for ep in self.episodes)

    def without_labels(self) -> "EpisodeDataset":
        return self.replace_episodes([ep.with_label(EpisodeLabel.UNKNOWN) for ep in self.episodes])

    def labels(self) -> Dict[int, EpisodeLabel]:
        return {ep.episode_id: ep.label for ep in self.episodes}

    def ids_with_label(self, label: EpisodeLabel) -> Set[int]:
        return {ep.episode_id for ep in self.episodes if ep.label == label}

    def all_states(self) -> np.ndarray:
        if not self.episodes:
            return np.zeros((0, self.state_dim), dtype=np.float32)
        return np.concatenate([ep.states for ep in self.episodes], axis=0)

    def all_actions(self) -> np.ndarray:
        if not self.episodes:
            return np.zeros((0, self.action_dim), dtype=np.float32)
        return np.concatenate([ep.actions for ep in self.episodes], axis=0)

    def returns(self) -> np.ndarray:
        """Episodic return of every episode, in dataset order (float64)"""
        return np.array([episodic_return(ep) for ep in self.episodes], dtype=np.float64)

    def returns_by_id(self) -> Dict[int, float]:
        return {ep.episode_id: episodic_return(ep) for ep in self.episodes}

    def state_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        states = self.all_states().astype(np.float64)
        return states.min(axis=0), states.max(axis=0)

    def action_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        actions = self.all_actions().astype(np.float64)
        return actions.min(axis=0), actions.max(axis=0)


@dataclass(frozen=True)
class HistogramBin:
    bin_lo: float
    bin_hi: float
    count: int


def episodic_return(ep: Episode) -> float:
    """
    Sum of per-step rewards, accumulated in float64

    Args:
        ep: Episode

    Returns:
        Episodic return
    """
    if len(ep) == 0:
        raise DomainError(f"episode {ep.episode_id} is empty")
    return float(np.sum(ep.rewards, dtype=np.float64))


def top_fraction(ds: EpisodeDataset, fraction: float) -> Set[int]:
    """
    Ids of the ceil(fraction * n) most rewarded episodes

    Ties are broken by ascending episode_id, so the result is deterministic
    and nested: top_fraction(ds, f1) is a subset of top_fraction(ds, f2)
    whenever f1 <= f2.

    Args:
        ds: Dataset with at least one episode
        fraction: Share of episodes to keep, in (0, 1]

    Returns:
        Set of selected episode ids
    """
    if not (0.0 < fraction <= 1.0):
        raise DomainError(f"fraction must be in (0, 1], got {fraction}")
    if ds.n_episodes == 0:
        raise DomainError("dataset is empty")

    count = top_count(ds.n_episodes, fraction)
    return set(ranked_ids(ds)[:count])


def top_count(n: int, fraction: float) -> int:
    """ceil(fraction * n), tolerant of representation error (0.3 * 10 -> 3)"""
    return min(n, max(1, int(math.ceil(fraction * n - 1e-9))))


def ranked_ids(ds: EpisodeDataset) -> List[int]:
    """Episode ids by descending return, ties by ascending id"""
    ids = np.array(ds.episode_ids, dtype=np.int64)
    returns = ds.returns()
    order = np.lexsort((ids, -returns))
    return [int(i) for i in ids[order]]


def return_histogram(ds: EpisodeDataset, n_bins: int) -> List[HistogramBin]:
    """
    Histogram of episodic returns over [min_return, max_return]

    Args:
        ds: Non-empty dataset
        n_bins: Number of uniform bins (>= 1)

    Returns:
        Bins in ascending order; the maximum falls in the last bin. When all
        returns are equal a single bin [v, v] holds every episode.
    """
    if n_bins < 1:
        raise DomainError(f"n_bins must be >= 1, got {n_bins}")
    if ds.n_episodes == 0:
        raise DomainError("cannot build a histogram of an empty dataset")

    returns = ds.returns()
    lo, hi = float(returns.min()), float(returns.max())
    if lo == hi:
        return [HistogramBin(lo, hi, int(len(returns)))]

    counts, edges = np.histogram(returns, bins=n_bins, range=(lo, hi))
    return [
        HistogramBin(float(edges[i]), float(edges[i + 1]), int(counts[i]))
        for i in range(n_bins)
    ]


def return_histogram_by_label(ds: EpisodeDataset, n_bins: int) -> List[Dict[str, float]]:
    """
    Return histogram with per-label counts in every bin

    Bins are the same as return_histogram's; each row carries bin_lo,
    bin_hi, count and one count column per label (expert, weak, unknown).
    """
    bins = return_histogram(ds, n_bins)
    returns = ds.returns()
    labels = np.array([int(ep.label) for ep in ds.episodes])

    rows = [
        {"bin_lo": b.bin_lo, "bin_hi": b.bin_hi, "count": b.count}
        for b in bins
    ]
    for label in EpisodeLabel:
        mask = labels == int(label)
        if len(bins) == 1:
            counts = [int(mask.sum())]
        else:
            counts, _ = np.histogram(returns[mask], bins=len(bins), range=(bins[0].bin_lo, bins[-1].bin_hi))
        for row, count in zip(rows, counts):
            row[label.name.lower()] = int(count)

    return rows
