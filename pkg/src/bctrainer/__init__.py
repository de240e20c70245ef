"""Behavioral cloning with the two-phase augmented-then-raw schedule"""
from src.bctrainer.policy import PolicyModel
from src.bctrainer.trainer import (
    BcConfig,
    PhaseConfig,
    TrainingResult,
    equivariance_gap,
    evaluate_bc_loss,
    train_bc,
    train_single_phase,
    train_theory_to_real,
)

__all__ = [
    "BcConfig",
    "PhaseConfig",
    "PolicyModel",
    "TrainingResult",
    "equivariance_gap",
    "evaluate_bc_loss",
    "train_bc",
    "train_single_phase",
    "train_theory_to_real",
]
