"""
BC Trainer Module - Behavioral cloning and the two-phase augmented-then-raw schedule
"""
from dataclasses import dataclass, field
from typing import List, Tuple
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.bctrainer.policy import PolicyModel
from src.dataset.episodes import EpisodeDataset
from src.exceptions import DimensionMismatchError, DomainError
from src.neuralnet.losses import LossKind
from src.neuralnet.optimizer import AdamState
from src.neuralnet.training import backward_and_step
from src.seeding import make_rng
from src.symaug.augment import rotate_batch
from src.symaug.schema import SymmetrySchema

logger = logging.getLogger(__name__)

# Transition count of the reference dataset the full-length schedule was sized for
REFERENCE_TRANSITIONS = 2.8e6
REFERENCE_PHASE1_STEPS = 500_000
MIN_PHASE1_STEPS = 50
LOG_EVERY = 1000

LossCurve = List[Tuple[int, float]]


class PhaseConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    steps: int = Field(ge=0)
    batch: int = Field(default=1024, ge=1)
    lr: float = Field(gt=0)


class BcConfig(BaseModel):
    """Two-phase schedule: long, high-rate phase 1 then short, low-rate phase 2"""

    model_config = ConfigDict(extra="forbid")

    phase1: PhaseConfig = Field(default_factory=lambda: PhaseConfig(steps=5000, batch=1024, lr=1e-3))
    phase2: PhaseConfig = Field(default_factory=lambda: PhaseConfig(steps=2000, batch=1024, lr=2e-4))
    policy_hidden: List[int] = Field(default_factory=lambda: [256, 256])
    rng_seed: int = Field(default=0, ge=0)
    # for_dataset rescales the step counts to the training set unless this is off
    scale_to_data: bool = True

    @model_validator(mode="after")
    def _check_schedule(self) -> "BcConfig":
        if not self.phase1.lr > self.phase2.lr:
            raise ValueError(f"phase1.lr ({self.phase1.lr}) must exceed phase2.lr ({self.phase2.lr})")
        if not self.phase1.steps > self.phase2.steps:
            raise ValueError(f"phase1.steps ({self.phase1.steps}) must exceed phase2.steps ({self.phase2.steps})")
        if any(width < 1 for width in self.policy_hidden):
            raise ValueError("policy_hidden widths must be >= 1")
        return self

    def scaled_for(self, n_transitions: int) -> "BcConfig":
        """Schedule rescaled to a dataset size, keeping the 5:2 step ratio and both learning rates"""
        if n_transitions < 1:
            raise DomainError(f"n_transitions must be >= 1, got {n_transitions}")
        phase1_steps = max(MIN_PHASE1_STEPS, int(round(REFERENCE_PHASE1_STEPS * n_transitions / REFERENCE_TRANSITIONS)))
        phase2_steps = int(round(phase1_steps * 2 / 5))
        return self.model_copy(update={
            "phase1": self.phase1.model_copy(update={"steps": phase1_steps}),
            "phase2": self.phase2.model_copy(update={"steps": phase2_steps}),
        })

    def for_dataset(self, n_transitions: int) -> "BcConfig":
        """The schedule to train with on n_transitions (state, action) pairs"""
        if not self.scale_to_data:
            return self
        scaled = self.scaled_for(n_transitions)
        logger.info(
            f"BC schedule scaled to {n_transitions} transitions: "
            f"phase1 {scaled.phase1.steps} steps, phase2 {scaled.phase2.steps} steps"
        )
        return scaled


@dataclass
class TrainingResult:
    policy: PolicyModel
    phase1_curve: LossCurve = field(default_factory=list)
    phase2_curve: LossCurve = field(default_factory=list)
    phase1_steps: int = 0
    phase2_steps: int = 0

    def summary(self) -> dict:
        return {
            "phase1_steps": self.phase1_steps,
            "phase2_steps": self.phase2_steps,
            "phase1_final_loss": self.phase1_curve[-1][1] if self.phase1_curve else None,
            "phase2_final_loss": self.phase2_curve[-1][1] if self.phase2_curve else None,
            "phase1_points": len(self.phase1_curve),
            "phase2_points": len(self.phase2_curve),
        }


def _check_dims(ds: EpisodeDataset, policy: PolicyModel, what: str) -> None:
    if ds.state_dim != policy.state_dim:
        raise DimensionMismatchError("state_dim", policy.state_dim, ds.state_dim, what)
    if ds.action_dim != policy.action_dim:
        raise DimensionMismatchError("action_dim", policy.action_dim, ds.action_dim, what)


def train_bc(ds: EpisodeDataset, policy: PolicyModel, steps: int, batch: int, lr: float,
             rng: np.random.Generator, log_every: int = LOG_EVERY) -> Tuple[PolicyModel, LossCurve]:
    """
    Regress the policy's actions onto the dataset's actions

    Minibatches are drawn uniformly with replacement over all (state,
    action) pairs; the loss is MSE in the normalized action space and the
    optimizer is a fresh Adam at the given rate.

    Args:
        ds: Training dataset
        policy: Policy, updated in place
        steps: Number of Adam updates
        batch: Minibatch size
        lr: Learning rate
        rng: Minibatch sampling stream
        log_every: Loss-curve sampling period

    Returns:
        (policy, [(step, minibatch loss)] at step 1, every log_every steps and the last step)
    """
    if ds.n_episodes == 0:
        raise DomainError("cannot train on an empty dataset")
    _check_dims(ds, policy, "train_bc")
    if steps < 0 or batch < 1:
        raise DomainError(f"steps must be >= 0 and batch >= 1, got {steps} and {batch}")

    states = policy.normalize_states(ds.all_states())
    targets = policy.normalize_actions(ds.all_actions())
    adam = AdamState.for_parameters(policy.network.parameters(), lr=lr)

    curve: LossCurve = []
    for step in range(1, steps + 1):
        idx = rng.integers(0, len(states), size=batch)
        _, loss = backward_and_step(policy.network, adam, states[idx], targets[idx], LossKind.MSE)
        if step == 1 or step % log_every == 0 or step == steps:
            curve.append((step, loss))
            logger.debug(f"BC step {step}/{steps}: loss {loss:.6f}")

    if curve:
        logger.info(f"BC trained {steps} steps (lr {lr}, batch {batch}): loss {curve[0][1]:.5f} -> {curve[-1][1]:.5f}")
    return policy, curve


def train_single_phase(ds: EpisodeDataset, cfg: BcConfig) -> TrainingResult:
    """Fresh policy trained on ds with the phase-1 schedule only"""
    seed = cfg.rng_seed
    policy = PolicyModel.create(ds, cfg.policy_hidden, make_rng(seed, "train", "init"))
    policy, curve = train_bc(ds, policy, cfg.phase1.steps, cfg.phase1.batch, cfg.phase1.lr,
                             make_rng(seed, "train", 1))
    return TrainingResult(policy, curve, [], phase1_steps=cfg.phase1.steps)


def train_theory_to_real(raw_ds: EpisodeDataset, aug_ds: EpisodeDataset, cfg: BcConfig) -> TrainingResult:
    """
    Train on the augmented dataset, then fine-tune on the raw one

    Phase 1 starts from a fresh initialization with normalization statistics
    of aug_ds; phase 2 continues the phase-1 weights with reset Adam moments
    at the lower learning rate.

    Args:
        raw_ds: Original (filtered) dataset
        aug_ds: Augmented dataset
        cfg: Schedule

    Returns:
        TrainingResult with the final policy and both loss curves
    """
    if (raw_ds.state_dim, raw_ds.action_dim) != (aug_ds.state_dim, aug_ds.action_dim):
        raise DimensionMismatchError("state_dim", aug_ds.state_dim, raw_ds.state_dim, "raw vs augmented dataset")

    result = train_single_phase(aug_ds, cfg)
    logger.info(f"Phase 1 done on {aug_ds.n_episodes} augmented episodes; fine-tuning on {raw_ds.n_episodes} raw")
    policy, curve2 = train_bc(raw_ds, result.policy, cfg.phase2.steps, cfg.phase2.batch, cfg.phase2.lr,
                              make_rng(cfg.rng_seed, "train", 2))
    return TrainingResult(policy, result.phase1_curve, curve2,
                          phase1_steps=cfg.phase1.steps, phase2_steps=cfg.phase2.steps)


def evaluate_bc_loss(policy: PolicyModel, ds: EpisodeDataset) -> float:
    """Normalized-space MSE of the policy over every pair of ds"""
    _check_dims(ds, policy, "evaluate_bc_loss")
    pred = policy.network.forward(policy.normalize_states(ds.all_states())).astype(np.float64)
    target = policy.normalize_actions(ds.all_actions()).astype(np.float64)
    return float(np.mean((pred - target) ** 2))


def equivariance_gap(policy: PolicyModel, states: np.ndarray, schema: SymmetrySchema,
                     k: int = 1) -> float:
    """
    Mean distance between the rotated action and the action at the rotated state

    A diagnostic: exact equivariance gives 0.
    """
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    actions = policy.act(states).astype(np.float64)
    rot_states, rot_actions = rotate_batch(states, actions, k, schema)
    at_rotated = policy.act(rot_states).astype(np.float64)
    return float(np.mean(np.linalg.norm(rot_actions - at_rotated, axis=1)))
