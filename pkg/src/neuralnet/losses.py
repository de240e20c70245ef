"""
Losses Module - Cross-entropy and mean squared error with their output gradients
"""
from enum import Enum
from typing import Tuple

import numpy as np

from src.exceptions import DomainError, ShapeError
from src.neuralnet.mlp import Activation

PROBABILITY_FLOOR = 1e-12


class LossKind(str, Enum):
    CE = "ce"
    MSE = "mse"


def _class_targets(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    target = np.asarray(target).reshape(-1)
    if pred.ndim != 2 or len(target) != len(pred):
        raise ShapeError(f"CE needs (B, C) predictions and B class indices, got {pred.shape} and {target.shape}")
    if not np.issubdtype(target.dtype, np.integer):
        if not np.all(target == np.round(target)):
            raise DomainError("CE targets must be class indices")
        target = target.astype(np.int64)
    if len(target) and (target.min() < 0 or target.max() >= pred.shape[1]):
        raise DomainError(f"class index out of range [0, {pred.shape[1]})")
    return target


def loss_ce(pred: np.ndarray, target: np.ndarray) -> float:
    """
    Mean cross-entropy of class probabilities

    Args:
        pred: (B, C) probabilities
        target: (B,) class indices

    Returns:
        mean of -log(max(pred[target], 1e-12)), accumulated in float64
    """
    pred = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    target = _class_targets(pred, target)
    picked = pred[np.arange(len(target)), target]
    return float(np.mean(-np.log(np.maximum(picked, PROBABILITY_FLOOR))))


def loss_mse(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean squared error over batch and dims, accumulated in float64"""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"MSE shapes differ: {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


def compute_loss(kind: LossKind, pred: np.ndarray, target: np.ndarray) -> float:
    return loss_ce(pred, target) if LossKind(kind) == LossKind.CE else loss_mse(pred, target)


def output_gradient(kind: LossKind, final_activation: Activation, pred: np.ndarray,
                    target: np.ndarray) -> Tuple[float, np.ndarray, bool]:
    """
    Loss value and the gradient that starts the backward pass

    Returns:
        (loss, gradient, gradient_is_pre_activation). For Softmax followed by
        CE the gradient is the fused logit gradient (p - onehot) / B.
    """
    kind = LossKind(kind)
    if kind == LossKind.CE:
        if final_activation != Activation.SOFTMAX:
            raise ShapeError("CE loss needs a Softmax output layer")
        loss = loss_ce(pred, target)
        classes = _class_targets(np.atleast_2d(pred), target)
        grad = np.array(pred, dtype=np.float64)
        grad[np.arange(len(classes)), classes] -= 1.0
        grad /= len(classes)
        return loss, grad, True

    loss = loss_mse(pred, target)
    grad = 2.0 * (np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)) / np.size(pred)
    return loss, grad, False
