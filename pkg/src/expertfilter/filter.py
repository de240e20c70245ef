"""
Expert Filter Module - Semi-supervised separation of expert episodes from a mixed dataset

Seeds the positive set with the most rewarded episodes, trains a classifier
against synthesized negatives, scores every episode by its mean per-step
confidence and grows the positive set until it stops changing.
"""
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.dataset.episodes import Episode, EpisodeDataset, top_fraction
from src.exceptions import DomainError, PreconditionError, TrainingError
from src.expertfilter.classifier import ExpertClassifier
from src.neuralnet.optimizer import AdamState
from src.seeding import make_rng

logger = logging.getLogger(__name__)


class FilterConfig(BaseModel):
    """Filter hyperparameters; theta_conf 0.96 suits well-separated data, 0.95 overlapping data"""

    model_config = ConfigDict(extra="forbid")

    seed_fraction: float = Field(default=0.10, gt=0, le=1)
    theta_conf: float = Field(default=0.95, gt=0, lt=1)
    epochs_per_iter: int = Field(default=20, ge=1)
    batch_size: int = Field(default=1024, ge=2)
    lr: float = Field(default=1e-3, gt=0)
    max_iters: int = Field(default=10, ge=1)
    rng_seed: int = Field(default=0, ge=0)
    min_updates_per_iter: int = Field(default=200, ge=0)


@dataclass
class IterationRecord:
    iteration: int
    positives_before: int
    positives_after: int
    added: int
    removed: int
    pairs: int
    loss: float
    epochs: int
    converged: bool

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass(eq=False)
class FilterState:
    """Classifier, optimizer and the current positive set"""

    classifier: ExpertClassifier
    adam: AdamState
    positives: FrozenSet[int]
    seed_ids: FrozenSet[int]
    iteration: int = 0
    history: List[IterationRecord] = field(default_factory=list)
    converged: bool = False
    last_loss: float = float("nan")
    last_epochs: int = 0
    last_pairs: int = 0


def seed_positives(ds: EpisodeDataset, cfg: FilterConfig) -> Set[int]:
    """Most rewarded seed_fraction of the episodes"""
    return top_fraction(ds, cfg.seed_fraction)


def positive_pairs(ds: EpisodeDataset, positives) -> Tuple[np.ndarray, np.ndarray]:
    """Every step of every positive episode, in dataset order"""
    chosen = ds.subset(positives)
    return chosen.all_states(), chosen.all_actions()


def synthesize_negatives(positives: Tuple[np.ndarray, np.ndarray], ds: EpisodeDataset, n: int,
                         rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Build n negative (state, action) pairs

    The count is split as evenly as possible over three strategies, filled
    in order: positive state with a random action, random state with a
    positive action, random state with a random action. Random values are
    uniform within the per-dimension range observed in ds.

    Args:
        positives: (states, actions) of the positive steps
        ds: Dataset providing the observed ranges
        n: Number of pairs
        rng: Random generator

    Returns:
        (states, actions) float32 arrays of length n
    """
    pos_states, pos_actions = positives
    if len(pos_states) == 0:
        raise PreconditionError("cannot synthesize negatives without positive pairs")
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")

    s_lo, s_hi = ds.state_bounds()
    a_lo, a_hi = ds.action_bounds()
    counts = [n // 3 + (1 if i < n % 3 else 0) for i in range(3)]

    def random_states(m: int) -> np.ndarray:
        return rng.uniform(s_lo, s_hi, size=(m, len(s_lo)))

    def random_actions(m: int) -> np.ndarray:
        return rng.uniform(a_lo, a_hi, size=(m, len(a_lo)))

    states_1 = pos_states[rng.integers(0, len(pos_states), size=counts[0])]
    actions_1 = random_actions(counts[0])
    states_2 = random_states(counts[1])
    actions_2 = pos_actions[rng.integers(0, len(pos_actions), size=counts[1])]
    states_3 = random_states(counts[2])
    actions_3 = random_actions(counts[2])

    states = np.concatenate([states_1, states_2, states_3]).astype(np.float32)
    actions = np.concatenate([actions_1, actions_2, actions_3]).astype(np.float32)
    # float32 rounding may step just outside the observed range
    return np.clip(states, s_lo.astype(np.float32), s_hi.astype(np.float32)), \
        np.clip(actions, a_lo.astype(np.float32), a_hi.astype(np.float32))


class ExpertFilter:
    """
    Iterative expert-data filter

    The filter only sees an unlabeled copy of the dataset it is given.
    """

    def __init__(self, cfg: Optional[FilterConfig] = None):
        self.cfg = cfg or FilterConfig()

    def initial_state(self, ds: EpisodeDataset) -> FilterState:
        if ds.n_episodes == 0:
            raise PreconditionError("cannot filter an empty dataset")
        seeds = frozenset(seed_positives(ds, self.cfg))
        classifier = ExpertClassifier.create(
            ds.all_states(), ds.all_actions(), make_rng(self.cfg.rng_seed, "filter", "init")
        )
        adam = AdamState.for_parameters(classifier.parameters(), lr=self.cfg.lr)
        logger.info(
            f"Filter seeded with {len(seeds)} of {ds.n_episodes} episodes "
            f"(seed_fraction {self.cfg.seed_fraction})"
        )
        return FilterState(classifier, adam, seeds, seeds)

    def train_iteration(self, fs: FilterState, ds: EpisodeDataset) -> FilterState:
        """
        Train the classifier on the current positives against fresh negatives

        The classifier and Adam moments carry over from the previous
        iteration. Minibatches hold equal numbers of positive and negative
        pairs.
        """
        if not fs.positives:
            raise PreconditionError("positive set is empty")
        cfg = self.cfg
        rng = make_rng(cfg.rng_seed, "filter", fs.iteration)

        pos_states, pos_actions = positive_pairs(ds, fs.positives)
        neg_states, neg_actions = synthesize_negatives((pos_states, pos_actions), ds, len(pos_states), rng)

        half = max(1, cfg.batch_size // 2)
        n_pairs = len(pos_states)
        batches_per_epoch = math.ceil(n_pairs / half)
        epochs = cfg.epochs_per_iter
        if batches_per_epoch * epochs < cfg.min_updates_per_iter:
            epochs = math.ceil(cfg.min_updates_per_iter / batches_per_epoch)

        targets = None
        epoch_loss = float("nan")
        for epoch in range(epochs):
            pos_order = rng.permutation(n_pairs)
            neg_order = rng.permutation(n_pairs)
            losses = []
            for b in range(batches_per_epoch):
                pos_idx = pos_order[b * half:(b + 1) * half]
                neg_idx = neg_order[b * half:(b + 1) * half]
                states = np.concatenate([pos_states[pos_idx], neg_states[neg_idx]])
                actions = np.concatenate([pos_actions[pos_idx], neg_actions[neg_idx]])
                if targets is None or len(targets) != len(states):
                    targets = np.concatenate([np.ones(len(pos_idx), dtype=np.int64),
                                              np.zeros(len(neg_idx), dtype=np.int64)])
                loss, grads = fs.classifier.loss_and_gradients(states, actions, targets)
                if not np.isfinite(loss):
                    raise TrainingError(
                        f"non-finite classifier loss in filter iteration {fs.iteration}, epoch {epoch}"
                    )
                fs.adam.step(fs.classifier.parameters(), grads)
                losses.append(loss)
            epoch_loss = float(np.mean(losses))
            logger.debug(f"Filter iteration {fs.iteration} epoch {epoch}: loss {epoch_loss:.4f}")

        fs.last_loss = epoch_loss
        fs.last_epochs = epochs
        fs.last_pairs = n_pairs
        logger.info(
            f"Filter iteration {fs.iteration}: {n_pairs} positive pairs, {epochs} epochs x "
            f"{batches_per_epoch} batches, final epoch loss {epoch_loss:.4f}"
        )
        return fs

    def step_confidences(self, fs: FilterState, ep: Episode) -> np.ndarray:
        return fs.classifier.predict_proba(ep.states, ep.actions)

    def episode_confidence(self, fs: FilterState, ep: Episode) -> float:
        """Mean expert probability over the episode's steps"""
        if len(ep) == 0:
            raise DomainError(f"episode {ep.episode_id} is empty")
        return float(np.clip(np.mean(self.step_confidences(fs, ep)), 0.0, 1.0))

    def confidences(self, fs: FilterState, ds: EpisodeDataset) -> Dict[int, float]:
        """Confidence of every episode, scored in one batched pass"""
        if ds.n_episodes == 0:
            return {}
        probs = fs.classifier.predict_proba(ds.all_states(), ds.all_actions())
        means = np.clip(probs.reshape(ds.n_episodes, ds.episode_len).mean(axis=1), 0.0, 1.0)
        return {ep_id: float(c) for ep_id, c in zip(ds.episode_ids, means)}

    def select(self, fs: FilterState, ds: EpisodeDataset, theta: Optional[float] = None,
               confidences: Optional[Dict[int, float]] = None) -> Set[int]:
        """
        Episodes whose confidence reaches the threshold, plus the seed set

        Args:
            fs: Filter state with a trained classifier
            ds: Dataset to score
            theta: Threshold override in (0, 1]; defaults to cfg.theta_conf
            confidences: Precomputed confidences of ds

        Returns:
            Selected episode ids
        """
        theta = self.cfg.theta_conf if theta is None else theta
        if not (0.0 < theta <= 1.0):
            raise DomainError(f"theta must be in (0, 1], got {theta}")
        conf = confidences if confidences is not None else self.confidences(fs, ds)
        return {ep_id for ep_id, c in conf.items() if c >= theta} | set(fs.seed_ids)

    def run(self, ds: EpisodeDataset) -> Tuple[FilterState, Set[int]]:
        """
        Iterate training and selection until the positive set stops changing

        Args:
            ds: Dataset to filter; its labels are discarded before use

        Returns:
            (final filter state, selected episode ids)
        """
        ds = ds.without_labels()
        fs = self.initial_state(ds)

        for i in range(self.cfg.max_iters):
            fs.iteration = i
            before = fs.positives
            self.train_iteration(fs, ds)
            selected = frozenset(self.select(fs, ds))
            converged = selected == before
            fs.history.append(IterationRecord(
                iteration=i,
                positives_before=len(before),
                positives_after=len(selected),
                added=len(selected - before),
                removed=len(before - selected),
                pairs=fs.last_pairs,
                loss=fs.last_loss,
                epochs=fs.last_epochs,
                converged=converged,
            ))
            logger.info(
                f"Filter iteration {i}: positives {len(before)} -> {len(selected)} "
                f"(+{len(selected - before)} / -{len(before - selected)})"
            )
            fs.positives = selected
            if converged:
                fs.converged = True
                break

        if not fs.converged:
            logger.warning(f"Filter stopped at max_iters={self.cfg.max_iters} without convergence")
        return fs, set(fs.positives)


def run_filter(ds: EpisodeDataset, cfg: Optional[FilterConfig] = None) -> Tuple[FilterState, Set[int]]:
    """Run the expert filter on ds with cfg"""
    return ExpertFilter(cfg).run(ds)
