"""
MLP Module - Dense feed-forward network with reverse-mode gradients
"""
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np

from src.exceptions import DomainError, ShapeError

logger = logging.getLogger(__name__)


class Activation(str, Enum):
    RELU = "relu"
    TANH = "tanh"
    IDENTITY = "identity"
    SOFTMAX = "softmax"


def activate(kind: Activation, z: np.ndarray) -> np.ndarray:
    if kind == Activation.RELU:
        return np.maximum(z, 0)
    if kind == Activation.TANH:
        return np.tanh(z)
    if kind == Activation.IDENTITY:
        return z
    shifted = z - z.max(axis=1, keepdims=True)
    exps = np.exp(shifted)
    return exps / exps.sum(axis=1, keepdims=True)


def activation_backward(kind: Activation, z: np.ndarray, a: np.ndarray, grad_a: np.ndarray) -> np.ndarray:
    """Gradient with respect to the pre-activation z"""
    if kind == Activation.RELU:
        return grad_a * (z > 0)
    if kind == Activation.TANH:
        return grad_a * (1 - a * a)
    if kind == Activation.IDENTITY:
        return grad_a
    # softmax Jacobian-vector product
    return a * (grad_a - np.sum(grad_a * a, axis=1, keepdims=True))


@dataclass(eq=False)
class DenseLayer:
    """y = activation(x @ weight + bias), weight shaped (fan_in, fan_out)"""

    weight: np.ndarray
    bias: np.ndarray
    activation: Activation

    @property
    def fan_in(self) -> int:
        return self.weight.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weight.shape[1]


LayerCache = Tuple[np.ndarray, np.ndarray, np.ndarray]


class MlpModel:
    """Chain of dense layers; Softmax is only allowed on the last one"""

    def __init__(self, layers: Sequence[DenseLayer]):
        if not layers:
            raise ShapeError("an MLP needs at least one layer")
        for i, layer in enumerate(layers):
            layer.activation = Activation(layer.activation)
            if layer.weight.ndim != 2 or layer.bias.shape != (layer.fan_out,):
                raise ShapeError(f"layer {i}: weight {layer.weight.shape} and bias {layer.bias.shape} disagree")
            if i > 0 and layers[i - 1].fan_out != layer.fan_in:
                raise ShapeError(
                    f"layer {i} expects {layer.fan_in} inputs, layer {i - 1} gives {layers[i - 1].fan_out}"
                )
            if layer.activation == Activation.SOFTMAX and i != len(layers) - 1:
                raise ShapeError("Softmax is only allowed on the final layer")
            if not (np.all(np.isfinite(layer.weight)) and np.all(np.isfinite(layer.bias))):
                raise DomainError(f"layer {i} has non-finite parameters")
        self.layers = list(layers)

    @classmethod
    def create(cls, sizes: Sequence[int], activations: Union[Activation, Sequence[Activation]],
               rng: np.random.Generator, dtype=np.float32) -> "MlpModel":
        """
        Glorot-uniform weights, zero biases

        Args:
            sizes: Layer widths including input and output, e.g. [10, 256, 256, 6]
            activations: One activation per layer (or a single one for all)
            rng: Random generator
            dtype: Parameter dtype (float32 for training, float64 for checks)

        Returns:
            New model
        """
        n_layers = len(sizes) - 1
        if n_layers < 1:
            raise ShapeError(f"need at least two sizes, got {list(sizes)}")
        if isinstance(activations, (Activation, str)):
            activations = [Activation(activations)] * n_layers
        if len(activations) != n_layers:
            raise ShapeError(f"{n_layers} layers but {len(activations)} activations")

        layers = []
        for fan_in, fan_out, act in zip(sizes[:-1], sizes[1:], activations):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weight = rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)
            layers.append(DenseLayer(weight, np.zeros(fan_out, dtype=dtype), Activation(act)))
        return cls(layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].fan_in

    @property
    def output_dim(self) -> int:
        return self.layers[-1].fan_out

    @property
    def dtype(self):
        return self.layers[0].weight.dtype

    @property
    def final_activation(self) -> Activation:
        return self.layers[-1].activation

    def parameters(self) -> List[np.ndarray]:
        """Live parameter arrays, ordered W0, b0, W1, b1, ..."""
        params = []
        for layer in self.layers:
            params.extend([layer.weight, layer.bias])
        return params

    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x))
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ShapeError(f"input width {x.shape[-1]} does not match model input_dim {self.input_dim}")
        return x.astype(self.dtype, copy=False)

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Batch forward pass, input (B, input_dim) -> output (B, output_dim)"""
        a = self._check_input(x)
        for layer in self.layers:
            a = activate(layer.activation, a @ layer.weight + layer.bias)
        return a

    def forward_with_cache(self, x: np.ndarray) -> Tuple[np.ndarray, List[LayerCache]]:
        a = self._check_input(x)
        cache = []
        for layer in self.layers:
            z = a @ layer.weight + layer.bias
            out = activate(layer.activation, z)
            cache.append((a, z, out))
            a = out
        return a, cache

    def backward(self, cache: List[LayerCache], grad_output: np.ndarray,
                 grad_is_pre_activation: bool = False) -> Tuple[List[np.ndarray], np.ndarray]:
        """
        Reverse-mode pass

        Args:
            cache: From forward_with_cache
            grad_output: dLoss/d(output), or dLoss/d(final pre-activation)
                when grad_is_pre_activation (fused Softmax + cross-entropy)
            grad_is_pre_activation: Skip the final activation's Jacobian

        Returns:
            (gradients aligned with parameters(), dLoss/d(input))
        """
        grads: List[Optional[np.ndarray]] = [None] * (2 * len(self.layers))
        grad = np.asarray(grad_output, dtype=self.dtype)
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            a_in, z, a_out = cache[i]
            if i == len(self.layers) - 1 and grad_is_pre_activation:
                grad_z = grad
            else:
                grad_z = activation_backward(layer.activation, z, a_out, grad)
            grads[2 * i] = a_in.T @ grad_z
            grads[2 * i + 1] = grad_z.sum(axis=0)
            grad = grad_z @ layer.weight.T
        return grads, grad

    def copy(self) -> "MlpModel":
        return MlpModel([
            DenseLayer(layer.weight.copy(), layer.bias.copy(), layer.activation)
            for layer in self.layers
        ])

    def astype(self, dtype) -> "MlpModel":
        return MlpModel([
            DenseLayer(layer.weight.astype(dtype), layer.bias.astype(dtype), layer.activation)
            for layer in self.layers
        ])

    def equals(self, other: "MlpModel") -> bool:
        """Bit-exact equality of architecture and parameters"""
        if len(self.layers) != len(other.layers):
            return False
        return all(
            a.activation == b.activation
            and np.array_equal(a.weight, b.weight)
            and np.array_equal(a.bias, b.bias)
            for a, b in zip(self.layers, other.layers)
        )

    def describe(self) -> List[Dict[str, Any]]:
        return [
            {"in": layer.fan_in, "out": layer.fan_out, "activation": layer.activation.value}
            for layer in self.layers
        ]
