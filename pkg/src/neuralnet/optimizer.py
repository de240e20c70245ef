"""
Optimizer Module - Adam with bias correction over a list of parameter arrays
"""
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from src.exceptions import DomainError, ShapeError


@dataclass(eq=False)
class AdamState:
    """First/second moments mirror the parameter shapes; t counts updates"""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_parameters(cls, params: Sequence[np.ndarray], lr: float = 1e-3) -> "AdamState":
        if lr <= 0:
            raise DomainError(f"learning rate must be positive, got {lr}")
        return cls(
            lr=lr,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        """Update params in place"""
        if len(params) != len(self.m) or len(grads) != len(params):
            raise ShapeError(f"Adam tracks {len(self.m)} arrays, got {len(params)} params and {len(grads)} grads")

        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            g = np.asarray(g, dtype=p.dtype)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / correction1
            v_hat = v / correction2
            p -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.dtype, copy=False)
