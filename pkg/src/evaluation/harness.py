"""
Evaluation Harness Module - Policy rollouts, filter scoring and comparison tables
"""
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple
import logging

import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix

from config import get_settings
from src.dataset.episodes import EpisodeDataset, EpisodeLabel, ranked_ids
from src.exceptions import DimensionMismatchError, DomainError, LabelError
from src.seeding import make_rng
from src.synthenv.env import ACTION_DIM, STATE_DIM, EnvParams, EnvState, reset, step
from src.synthenv.policies import expert_policy

logger = logging.getLogger(__name__)

SD_COMMENT = "# sd: population standard deviation (ddof=0)"


@dataclass
class EvalReport:
    """Per-episode returns with their mean and population SD"""

    per_episode_returns: List[float]
    mean: float
    sd: float
    n_episodes: int
    seeds: List[int] = field(default_factory=list)

    @classmethod
    def from_returns(cls, returns: Sequence[float], seeds: Sequence[int]) -> "EvalReport":
        values = np.asarray(returns, dtype=np.float64)
        if len(values) == 0:
            raise DomainError("an evaluation report needs at least one episode")
        return cls(
            per_episode_returns=[float(v) for v in values],
            mean=float(np.mean(values)),
            sd=float(np.std(values, ddof=0)),
            n_episodes=int(len(values)),
            seeds=[int(s) for s in seeds],
        )

    @classmethod
    def merge(cls, reports: Sequence["EvalReport"]) -> "EvalReport":
        """Pool several reports (e.g. one per training seed) into one"""
        returns: List[float] = []
        seeds: List[int] = []
        for report in reports:
            returns.extend(report.per_episode_returns)
            seeds.extend(report.seeds)
        return cls.from_returns(returns, seeds)

    def to_dict(self) -> Dict:
        return asdict(self)


class ZeroPolicy:
    """Commands no motion"""

    state_dim = STATE_DIM
    action_dim = ACTION_DIM

    def act(self, state: np.ndarray) -> np.ndarray:
        return np.zeros(ACTION_DIM)


class ScriptedExpert:
    """The data-generating expert controller as an evaluable policy"""

    state_dim = STATE_DIM
    action_dim = ACTION_DIM

    def __init__(self, params: EnvParams):
        self.params = params

    def for_episode(self, rng: np.random.Generator) -> Callable[[np.ndarray], np.ndarray]:
        """Per-episode actor drawing its action noise from rng"""
        def act(state: np.ndarray) -> np.ndarray:
            return expert_policy(EnvState.from_vector(state), self.params, rng)
        return act


def _check_policy_dims(policy) -> None:
    state_dim = getattr(policy, "state_dim", STATE_DIM)
    action_dim = getattr(policy, "action_dim", ACTION_DIM)
    if state_dim != STATE_DIM:
        raise DimensionMismatchError("state_dim", STATE_DIM, state_dim, "policy vs environment")
    if action_dim != ACTION_DIM:
        raise DimensionMismatchError("action_dim", ACTION_DIM, action_dim, "policy vs environment")


def rollout_return(policy, params: EnvParams, rng: np.random.Generator) -> float:
    """Return of one episode from a freshly sampled object/goal placement"""
    state = reset(params, rng)
    actor = policy.for_episode(rng) if hasattr(policy, "for_episode") else policy.act
    total = 0.0
    for _ in range(params.episode_len):
        state, reward = step(state, actor(state.to_vector()), params)
        total += reward
    return total


def evaluate_policy(policy, env_params: EnvParams, n_episodes: int = 15, seed: int = 0,
                    threads: Optional[int] = None) -> EvalReport:
    """
    Roll the policy out for n_episodes independent episodes

    Episode i samples its start from the stream (seed, "eval", i), which is
    disjoint from every generation and training stream.

    Args:
        policy: Object with act(state) -> action, or for_episode(rng) -> actor
        env_params: Environment parameters
        n_episodes: Number of evaluation episodes
        seed: Evaluation seed
        threads: Worker count; defaults to OPL_THREADS

    Returns:
        EvalReport; identical for identical arguments
    """
    if n_episodes < 1:
        raise DomainError(f"n_episodes must be >= 1, got {n_episodes}")
    _check_policy_dims(policy)
    workers = threads or get_settings().threads

    def run(i: int) -> float:
        return rollout_return(policy, env_params, make_rng(seed, "eval", i))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            returns = list(executor.map(run, range(n_episodes)))
    else:
        returns = [run(i) for i in range(n_episodes)]

    report = EvalReport.from_returns(returns, [seed])
    logger.info(f"Evaluated {n_episodes} episodes (seed {seed}): mean {report.mean:.3f} sd {report.sd:.3f}")
    return report


@dataclass(frozen=True)
class ConfusionMatrix:
    """Episode-level counts; positive means selected, truth means expert label"""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return self.tp / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else 0.0

    def to_dict(self) -> Dict[str, float]:
        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "accuracy": self.accuracy, "precision": self.precision, "recall": self.recall,
        }


def score_filter(selected: Iterable[int], ds: EpisodeDataset) -> ConfusionMatrix:
    """
    Compare a selection with the ground-truth expert labels

    Args:
        selected: Selected episode ids
        ds: Fully labeled dataset

    Returns:
        ConfusionMatrix whose counts partition the dataset
    """
    if not ds.has_labels():
        raise LabelError("dataset has no ground-truth labels")
    chosen: Set[int] = set(selected)
    unknown = chosen - set(ds.episode_ids)
    if unknown:
        raise DomainError(f"selected ids not in dataset: {sorted(unknown)[:5]}")

    y_true = [int(ep.label == EpisodeLabel.EXPERT) for ep in ds.episodes]
    y_pred = [int(ep.episode_id in chosen) for ep in ds.episodes]
    tn, fp, fn, tp = confusion_matrix(y_true, y_pred, labels=[0, 1]).ravel()
    return ConfusionMatrix(tp=int(tp), fp=int(fp), tn=int(tn), fn=int(fn))


def topk_matched_selection(ds: EpisodeDataset, size: int) -> Set[int]:
    """The size most rewarded episodes, the reward-only baseline for a filter selection"""
    if not (0 <= size <= ds.n_episodes):
        raise DomainError(f"size must be in [0, {ds.n_episodes}], got {size}")
    return set(ranked_ids(ds)[:size])


def comparison_frame(rows: Sequence[Tuple[str, EvalReport]]) -> pd.DataFrame:
    """name, mean, sd, n sorted by mean descending then name"""
    frame = pd.DataFrame(
        [{"name": name, "mean": r.mean, "sd": r.sd, "n": r.n_episodes} for name, r in rows],
        columns=["name", "mean", "sd", "n"],
    )
    frame["_neg_mean"] = -frame["mean"]
    frame = frame.sort_values(["_neg_mean", "name"], kind="mergesort").drop(columns="_neg_mean")
    return frame.reset_index(drop=True)


def compare_table(rows: Sequence[Tuple[str, EvalReport]]) -> str:
    """
    CSV comparison table

    Starts with a comment line naming the SD convention, then the header
    name,mean,sd,n; floats carry 6 decimals.
    """
    buffer = io.StringIO()
    buffer.write(SD_COMMENT + "\n")
    comparison_frame(rows).to_csv(buffer, index=False, float_format="%.6f", lineterminator="\n")
    return buffer.getvalue()
