"""
Training Step Module - Loss, gradients and one Adam update
"""
from typing import List, Tuple
import logging

import numpy as np

from src.exceptions import TrainingError
from src.neuralnet.losses import LossKind, compute_loss, output_gradient
from src.neuralnet.mlp import MlpModel
from src.neuralnet.optimizer import AdamState

logger = logging.getLogger(__name__)


def evaluate_loss(model: MlpModel, batch: np.ndarray, targets: np.ndarray, kind: LossKind) -> float:
    return compute_loss(kind, model.forward(batch), targets)


def loss_and_gradients(model: MlpModel, batch: np.ndarray, targets: np.ndarray,
                       kind: LossKind) -> Tuple[float, List[np.ndarray]]:
    """Forward pass, loss and reverse-mode gradients aligned with model.parameters()"""
    out, cache = model.forward_with_cache(batch)
    loss, grad, pre_activation = output_gradient(kind, model.final_activation, out, targets)
    grads, _ = model.backward(cache, grad, grad_is_pre_activation=pre_activation)
    return loss, grads


def backward_and_step(model: MlpModel, adam: AdamState, batch: np.ndarray, targets: np.ndarray,
                      kind: LossKind) -> Tuple[MlpModel, float]:
    """
    One optimisation step

    Args:
        model: Network, updated in place
        adam: Optimizer state matching model.parameters()
        batch: (B, input_dim) inputs
        targets: Class indices (CE) or (B, output_dim) targets (MSE)
        kind: Loss kind

    Returns:
        (model, loss before the update)
    """
    loss, grads = loss_and_gradients(model, batch, targets, kind)
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite {LossKind(kind).value} loss at Adam step {adam.t + 1}")
    adam.step(model.parameters(), grads)
    return model, loss
