"""Rollout evaluation, filter scoring and comparison tables"""
from src.evaluation.harness import (
    ConfusionMatrix,
    EvalReport,
    ScriptedExpert,
    ZeroPolicy,
    compare_table,
    evaluate_policy,
    score_filter,
    topk_matched_selection,
)

__all__ = [
    "ConfusionMatrix",
    "EvalReport",
    "ScriptedExpert",
    "ZeroPolicy",
    "compare_table",
    "evaluate_policy",
    "score_filter",
    "topk_matched_selection",
]
