"""
Expert Classifier Module - Two-branch network scoring (state, action) pairs

The state is condensed by a fully-connected encoder, the action is
concatenated to the code and a predictor head outputs two class
probabilities (weak, expert).
"""
from pathlib import Path
from typing import List, Tuple, Union
import logging

import numpy as np

from src.exceptions import DimensionMismatchError, FormatError
from src.neuralnet.checkpoint import load_checkpoint, save_checkpoint
from src.neuralnet.losses import LossKind, output_gradient
from src.neuralnet.mlp import Activation, MlpModel

logger = logging.getLogger(__name__)

ENCODER_HIDDEN = 256
ENCODER_CODE = 64
PREDICTOR_HIDDEN = 256
STD_FLOOR = 1e-6
SCORE_CHUNK = 50_000


def standardization(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-column mean and floored std, float32"""
    values = np.asarray(values, dtype=np.float64)
    return (
        values.mean(axis=0).astype(np.float32),
        np.maximum(values.std(axis=0), STD_FLOOR).astype(np.float32),
    )


class ExpertClassifier:
    """Encoder (state -> 256 -> 64, ReLU) and predictor ((64 + action) -> 256 -> 2, Softmax)"""

    def __init__(self, encoder: MlpModel, predictor: MlpModel,
                 state_mean: np.ndarray, state_std: np.ndarray,
                 action_mean: np.ndarray, action_std: np.ndarray):
        if predictor.input_dim != encoder.output_dim + len(action_mean):
            raise DimensionMismatchError(
                "predictor input", encoder.output_dim + len(action_mean), predictor.input_dim, "classifier"
            )
        if len(state_mean) != encoder.input_dim:
            raise DimensionMismatchError("state_dim", encoder.input_dim, len(state_mean), "classifier")
        self.encoder = encoder
        self.predictor = predictor
        self.state_mean = np.asarray(state_mean, dtype=np.float32)
        self.state_std = np.asarray(state_std, dtype=np.float32)
        self.action_mean = np.asarray(action_mean, dtype=np.float32)
        self.action_std = np.asarray(action_std, dtype=np.float32)

    @classmethod
    def create(cls, states: np.ndarray, actions: np.ndarray, rng: np.random.Generator) -> "ExpertClassifier":
        """
        Fresh classifier whose input standardization comes from the given data

        Args:
            states: (M, state_dim) states of the dataset to be filtered
            actions: (M, action_dim) actions of the same dataset
            rng: Initialization stream

        Returns:
            ExpertClassifier
        """
        state_dim, action_dim = states.shape[1], actions.shape[1]
        encoder = MlpModel.create(
            [state_dim, ENCODER_HIDDEN, ENCODER_CODE], Activation.RELU, rng
        )
        predictor = MlpModel.create(
            [ENCODER_CODE + action_dim, PREDICTOR_HIDDEN, 2], [Activation.RELU, Activation.SOFTMAX], rng
        )
        return cls(encoder, predictor, *standardization(states), *standardization(actions))

    @property
    def state_dim(self) -> int:
        return self.encoder.input_dim

    @property
    def action_dim(self) -> int:
        return len(self.action_mean)

    def parameters(self) -> List[np.ndarray]:
        return self.encoder.parameters() + self.predictor.parameters()

    def _joint_input(self, states: np.ndarray, actions: np.ndarray):
        states = np.atleast_2d(np.asarray(states, dtype=np.float32))
        actions = np.atleast_2d(np.asarray(actions, dtype=np.float32))
        if actions.shape[1] != self.action_dim:
            raise DimensionMismatchError("action_dim", self.action_dim, actions.shape[1], "classifier input")
        return (states - self.state_mean) / self.state_std, (actions - self.action_mean) / self.action_std

    def predict_proba(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Expert-class probability of every row, float64 in [0, 1]"""
        s_in, a_in = self._joint_input(states, actions)
        out = np.empty(len(s_in), dtype=np.float64)
        for start in range(0, len(s_in), SCORE_CHUNK):
            stop = start + SCORE_CHUNK
            code = self.encoder.forward(s_in[start:stop])
            probs = self.predictor.forward(np.concatenate([code, a_in[start:stop]], axis=1))
            out[start:stop] = probs[:, 1]
        return np.clip(out, 0.0, 1.0)

    def loss_and_gradients(self, states: np.ndarray, actions: np.ndarray,
                           targets: np.ndarray) -> Tuple[float, List[np.ndarray]]:
        """Cross-entropy and gradients aligned with parameters()"""
        s_in, a_in = self._joint_input(states, actions)
        code, encoder_cache = self.encoder.forward_with_cache(s_in)
        probs, predictor_cache = self.predictor.forward_with_cache(np.concatenate([code, a_in], axis=1))
        loss, grad, fused = output_gradient(LossKind.CE, self.predictor.final_activation, probs, targets)
        predictor_grads, joint_grad = self.predictor.backward(predictor_cache, grad, grad_is_pre_activation=fused)
        encoder_grads, _ = self.encoder.backward(encoder_cache, joint_grad[:, :code.shape[1]])
        return loss, encoder_grads + predictor_grads

    def save(self, path: Union[str, Path]) -> Path:
        metadata = {
            "state_mean": self.state_mean.tolist(),
            "state_std": self.state_std.tolist(),
            "action_mean": self.action_mean.tolist(),
            "action_std": self.action_std.tolist(),
        }
        return save_checkpoint(path, {"encoder": self.encoder, "predictor": self.predictor}, metadata)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExpertClassifier":
        models, meta = load_checkpoint(path)
        if set(models) != {"encoder", "predictor"}:
            raise FormatError("header", f"classifier checkpoint holds {sorted(models)}, expected encoder and predictor")
        return cls(
            models["encoder"], models["predictor"],
            np.array(meta["state_mean"]), np.array(meta["state_std"]),
            np.array(meta["action_mean"]), np.array(meta["action_std"]),
        )
