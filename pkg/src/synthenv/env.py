"""
Push Environment Module - Three-finger planar push task with exact 3-fold symmetry
"""
from dataclasses import dataclass
from typing import Tuple
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.dataset.rewards import RewardKernelParams, logistic_reward
from src.exceptions import DomainError, ShapeError
from src.symaug.schema import SymmetrySchema

logger = logging.getLogger(__name__)

N_FINGERS = 3
STATE_DIM = 10
ACTION_DIM = 6


class EnvParams(BaseModel):
    """Dynamics, reward and spawn parameters of the push environment"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    contact_radius: float = Field(default=0.08, gt=0)
    finger_speed_max: float = Field(default=0.05, gt=0)
    push_gain: float = Field(default=1.0, gt=0)
    episode_len: int = Field(default=150, ge=1)
    reward: RewardKernelParams = Field(default_factory=RewardKernelParams)
    rng_seed: int = Field(default=0, ge=0)
    arena_radius: float = Field(default=1.0, gt=0)
    spawn_radius: float = Field(default=0.8, gt=0)
    finger_home_radius: float = Field(default=0.6, gt=0)


@dataclass(frozen=True, eq=False)
class EnvState:
    """
    Positions of the three fingers, the object and the goal

    Flattened order: finger0 xy, finger1 xy, finger2 xy, object xy, goal xy.
    """

    finger_xy: np.ndarray
    object_xy: np.ndarray
    goal_xy: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "finger_xy", np.array(self.finger_xy, dtype=np.float64).reshape(N_FINGERS, 2))
        object.__setattr__(self, "object_xy", np.array(self.object_xy, dtype=np.float64).reshape(2))
        object.__setattr__(self, "goal_xy", np.array(self.goal_xy, dtype=np.float64).reshape(2))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.finger_xy.ravel(), self.object_xy, self.goal_xy])

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "EnvState":
        vector = np.asarray(vector, dtype=np.float64).ravel()
        if vector.shape[0] != STATE_DIM:
            raise ShapeError(f"state vector must have {STATE_DIM} entries, got {vector.shape[0]}")
        return cls(vector[:6], vector[6:8], vector[8:10])

    def goal_distance(self) -> float:
        return float(np.linalg.norm(self.object_xy - self.goal_xy))


def home_fingers(params: EnvParams) -> np.ndarray:
    """Finger i rests at angle 90 + i * 120 degrees on the home radius"""
    angles = np.deg2rad(90.0 + 120.0 * np.arange(N_FINGERS))
    return params.finger_home_radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def sample_in_disc(rng: np.random.Generator, radius: float) -> np.ndarray:
    """Uniform point in a disc"""
    r = radius * np.sqrt(rng.random())
    theta = 2.0 * np.pi * rng.random()
    return np.array([r * np.cos(theta), r * np.sin(theta)])


def reset(params: EnvParams, rng: np.random.Generator) -> EnvState:
    """Fingers at home, object and goal uniform in the spawn disc"""
    object_xy = sample_in_disc(rng, params.spawn_radius)
    goal_xy = sample_in_disc(rng, params.spawn_radius)
    return EnvState(home_fingers(params), object_xy, goal_xy)


def clamp_to_disc(points: np.ndarray, radius: float) -> np.ndarray:
    """Radially project points outside the disc back onto its boundary"""
    points = np.array(points, dtype=np.float64)
    norms = np.linalg.norm(points, axis=-1, keepdims=True)
    scale = np.where(norms > radius, radius / np.maximum(norms, 1e-300), 1.0)
    return points * scale


def clamp_action(action: np.ndarray, params: EnvParams) -> np.ndarray:
    """Clamp each finger's 2-D command to Euclidean norm finger_speed_max"""
    action = np.asarray(action, dtype=np.float64).ravel()
    if action.shape[0] != ACTION_DIM:
        raise ShapeError(f"action must have {ACTION_DIM} entries, got {action.shape[0]}")
    if not np.all(np.isfinite(action)):
        raise DomainError("action must be finite")
    return clamp_to_disc(action.reshape(N_FINGERS, 2), params.finger_speed_max).ravel()


def step(state: EnvState, action: np.ndarray, params: EnvParams) -> Tuple[EnvState, float]:
    """
    Advance one step

    Fingers translate by their clamped commands. Every finger that ends
    within contact_radius of the object pushes it by push_gain times the
    component of its displacement along the direction from its previous
    position to the object (positive components only); contributions add
    up. All positions stay inside the arena.

    Args:
        state: Current state
        action: Six velocity commands (finger0 xy, finger1 xy, finger2 xy)
        params: Environment parameters

    Returns:
        (next state, reward of the next object-goal distance)
    """
    command = clamp_action(action, params).reshape(N_FINGERS, 2)

    fingers = state.finger_xy
    moved = clamp_to_disc(fingers + command, params.arena_radius)
    displacement = moved - fingers

    obj = state.object_xy
    push = np.zeros(2)
    for i in range(N_FINGERS):
        if np.linalg.norm(moved[i] - obj) > params.contact_radius:
            continue
        to_object = obj - fingers[i]
        dist = np.linalg.norm(to_object)
        if dist == 0.0:
            continue
        direction = to_object / dist
        along = float(displacement[i] @ direction)
        # fingers push, never pull
        if along > 0.0:
            push = push + params.push_gain * along * direction

    new_object = clamp_to_disc(obj + push, params.arena_radius)
    next_state = EnvState(moved, new_object, state.goal_xy)
    reward = logistic_reward(next_state.goal_distance(), params.reward)
    return next_state, reward


def rollout(initial: EnvState, actions: np.ndarray, params: EnvParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    Replay a fixed action sequence

    Args:
        initial: Start state
        actions: (T, 6) commands
        params: Environment parameters

    Returns:
        (states (T, 10) before each step, rewards (T,)) in float64
    """
    actions = np.asarray(actions, dtype=np.float64)
    states = np.zeros((len(actions), STATE_DIM))
    rewards = np.zeros(len(actions))
    state = initial
    for t, action in enumerate(actions):
        states[t] = state.to_vector()
        state, rewards[t] = step(state, action, params)
    return states, rewards


def push_schema() -> SymmetrySchema:
    """Symmetry schema of the push environment's state and action vectors"""
    return SymmetrySchema(
        order=N_FINGERS,
        state_dim=STATE_DIM,
        action_dim=ACTION_DIM,
        finger_state_blocks=[(0, 2), (2, 4), (4, 6)],
        finger_action_blocks=[(0, 2), (2, 4), (4, 6)],
        finger_state_xy_offsets=[(0, 1)],
        finger_action_xy_offsets=[(0, 1)],
        planar_xy_pairs=[(6, 7), (8, 9)],
        invariant_indices=[],
    )
