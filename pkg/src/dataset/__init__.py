"""Episode datasets: data model, reward kernel and .opld files"""
from src.dataset.episodes import (
    Episode,
    EpisodeDataset,
    EpisodeLabel,
    HistogramBin,
    Transition,
    episodic_return,
    return_histogram,
    return_histogram_by_label,
    top_fraction,
)
from src.dataset.rewards import RewardKernelParams, logistic_reward

__all__ = [
    "Episode",
    "EpisodeDataset",
    "EpisodeLabel",
    "HistogramBin",
    "Transition",
    "RewardKernelParams",
    "episodic_return",
    "logistic_reward",
    "return_histogram",
    "return_histogram_by_label",
    "top_fraction",
]
