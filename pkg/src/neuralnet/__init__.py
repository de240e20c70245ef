"""Dense MLP engine: forward/backward, losses, Adam, gradient check, checkpoints"""
from src.neuralnet.checkpoint import load_checkpoint, save_checkpoint
from src.neuralnet.gradcheck import gradient_check
from src.neuralnet.losses import LossKind, loss_ce, loss_mse
from src.neuralnet.mlp import Activation, DenseLayer, MlpModel
from src.neuralnet.optimizer import AdamState
from src.neuralnet.training import backward_and_step, loss_and_gradients

__all__ = [
    "Activation",
    "AdamState",
    "DenseLayer",
    "LossKind",
    "MlpModel",
    "backward_and_step",
    "gradient_check",
    "load_checkpoint",
    "loss_and_gradients",
    "loss_ce",
    "loss_mse",
    "save_checkpoint",
]
