"""
Policy Model Module - Deterministic MLP policy with input standardization and bounded output
"""
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union
import logging

import numpy as np

from src.dataset.episodes import EpisodeDataset
from src.exceptions import DimensionMismatchError, FormatError
from src.neuralnet.checkpoint import load_checkpoint, save_checkpoint
from src.neuralnet.mlp import Activation, MlpModel

logger = logging.getLogger(__name__)

STD_FLOOR = 1e-6
HALF_RANGE_FLOOR = 1e-6


class PolicyModel:
    """
    state -> hidden ReLU layers -> Tanh output scaled to the action bounds

    The network regresses actions mapped to [-1, 1] from standardized states.
    """

    def __init__(self, network: MlpModel, state_mean: np.ndarray, state_std: np.ndarray,
                 action_low: np.ndarray, action_high: np.ndarray):
        if len(state_mean) != network.input_dim:
            raise DimensionMismatchError("state_dim", network.input_dim, len(state_mean), "policy")
        if len(action_low) != network.output_dim:
            raise DimensionMismatchError("action_dim", network.output_dim, len(action_low), "policy")
        self.network = network
        self.state_mean = np.asarray(state_mean, dtype=np.float32)
        self.state_std = np.maximum(np.asarray(state_std, dtype=np.float32), STD_FLOOR)
        self.action_low = np.asarray(action_low, dtype=np.float32)
        self.action_high = np.asarray(action_high, dtype=np.float32)
        self._center = (self.action_low + self.action_high) / 2
        self._half = np.maximum((self.action_high - self.action_low) / 2, HALF_RANGE_FLOOR).astype(np.float32)

    @classmethod
    def create(cls, ds: EpisodeDataset, hidden: Sequence[int], rng: np.random.Generator) -> "PolicyModel":
        """
        Fresh policy whose normalization statistics come from ds

        Args:
            ds: Training dataset (states standardized, action bounds recorded)
            hidden: Hidden layer widths
            rng: Initialization stream

        Returns:
            PolicyModel
        """
        states = ds.all_states().astype(np.float64)
        low, high = ds.action_bounds()
        sizes = [ds.state_dim, *hidden, ds.action_dim]
        activations = [Activation.RELU] * len(hidden) + [Activation.TANH]
        network = MlpModel.create(sizes, activations, rng)
        return cls(network, states.mean(axis=0), states.std(axis=0), low, high)

    @property
    def state_dim(self) -> int:
        return self.network.input_dim

    @property
    def action_dim(self) -> int:
        return self.network.output_dim

    def normalize_states(self, states: np.ndarray) -> np.ndarray:
        return (np.asarray(states, dtype=np.float32) - self.state_mean) / self.state_std

    def normalize_actions(self, actions: np.ndarray) -> np.ndarray:
        return (np.asarray(actions, dtype=np.float32) - self._center) / self._half

    def act(self, state: np.ndarray) -> np.ndarray:
        """
        Deterministic action for one state (1-D) or a batch of states (2-D)

        Outputs are clamped to the recorded action bounds.
        """
        state = np.asarray(state)
        single = state.ndim == 1
        if state.shape[-1] != self.state_dim:
            raise DimensionMismatchError("state_dim", self.state_dim, state.shape[-1], "policy input")
        out = self.network.forward(self.normalize_states(np.atleast_2d(state)))
        actions = np.clip(self._center + self._half * out, self.action_low, self.action_high)
        return actions[0] if single else actions

    def save(self, path: Union[str, Path], extra: Optional[Dict[str, Any]] = None) -> Path:
        metadata = {
            "state_mean": self.state_mean.tolist(),
            "state_std": self.state_std.tolist(),
            "action_low": self.action_low.tolist(),
            "action_high": self.action_high.tolist(),
            "extra": extra or {},
        }
        return save_checkpoint(path, {"policy": self.network}, metadata)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "PolicyModel":
        models, meta = load_checkpoint(path)
        if "policy" not in models:
            raise FormatError("header", f"checkpoint holds {sorted(models)}, no policy network")
        try:
            return cls(
                models["policy"],
                np.array(meta["state_mean"]), np.array(meta["state_std"]),
                np.array(meta["action_low"]), np.array(meta["action_high"]),
            )
        except KeyError as e:
            raise FormatError("header", f"policy metadata is missing {e}")
