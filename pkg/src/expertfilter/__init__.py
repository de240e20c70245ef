"""Semi-supervised expert-episode filter"""
from src.expertfilter.classifier import ExpertClassifier
from src.expertfilter.filter import (
    ExpertFilter,
    FilterConfig,
    FilterState,
    IterationRecord,
    run_filter,
    seed_positives,
    synthesize_negatives,
)

__all__ = [
    "ExpertClassifier",
    "ExpertFilter",
    "FilterConfig",
    "FilterState",
    "IterationRecord",
    "run_filter",
    "seed_positives",
    "synthesize_negatives",
]
