"""
Gradient Check Module - Central finite differences against reverse-mode gradients
"""
from typing import List

import numpy as np

from src.neuralnet.losses import LossKind
from src.neuralnet.mlp import MlpModel
from src.neuralnet.training import evaluate_loss, loss_and_gradients


def gradient_check(model: MlpModel, x: np.ndarray, y: np.ndarray, kind: LossKind,
                   eps: float = 1e-6) -> List[float]:
    """
    Relative error of every parameter array's analytic gradient

    Runs on a float64 copy of the model, so the caller's model is untouched.

    Returns:
        ||g_analytic - g_numeric|| / max(||g_analytic|| + ||g_numeric||, 1e-12)
        per parameter array, in parameters() order
    """
    probe = model.astype(np.float64)
    x = np.asarray(x, dtype=np.float64)
    if LossKind(kind) == LossKind.MSE:
        y = np.asarray(y, dtype=np.float64)
    _, analytic = loss_and_gradients(probe, x, y, kind)

    errors = []
    for param, grad in zip(probe.parameters(), analytic):
        numeric = np.zeros_like(param)
        for idx in np.ndindex(param.shape):
            original = param[idx]
            param[idx] = original + eps
            loss_plus = evaluate_loss(probe, x, y, kind)
            param[idx] = original - eps
            loss_minus = evaluate_loss(probe, x, y, kind)
            param[idx] = original
            numeric[idx] = (loss_plus - loss_minus) / (2.0 * eps)
        denom = max(float(np.linalg.norm(grad) + np.linalg.norm(numeric)), 1e-12)
        errors.append(float(np.linalg.norm(grad - numeric)) / denom)
    return errors
