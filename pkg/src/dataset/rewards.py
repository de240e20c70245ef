"""
Reward Kernel Module - Logistic kernel of the object-goal distance
"""
import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from typing import Union

from src.exceptions import DomainError

ArrayLike = Union[float, np.ndarray]


class RewardKernelParams(BaseModel):
    """Kernel shape: a sets the length scale, b the small-distance sensitivity"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    a: float = Field(default=30.0, gt=0)
    b: float = Field(default=0.01, gt=0)


def logistic_reward(distance: ArrayLike, params: RewardKernelParams) -> ArrayLike:
    """
    Logistic kernel k(d) = (b + 2) / (exp(a d) + b + exp(-a d))

    The denominator is evaluated as 2 cosh(a d) + b, so k(0) is exactly 1
    and large distances underflow cleanly to 0.

    Args:
        distance: Non-negative distance (scalar or array)
        params: Kernel parameters

    Returns:
        Reward in (0, 1], same shape as distance
    """
    d = np.asarray(distance, dtype=np.float64)
    if not np.all(np.isfinite(d)):
        raise DomainError("distance must be finite")
    if np.any(d < 0):
        raise DomainError(f"distance must be non-negative, got {d.min()}")

    with np.errstate(over="ignore"):
        denom = 2.0 * np.cosh(params.a * d) + params.b
    value = (params.b + 2.0) / denom

    if np.ndim(value) == 0:
        return float(value)
    return value
