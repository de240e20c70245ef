"""
Scripted Policies Module - Expert push controller and weaker behaviour sources
"""
from enum import Enum
from typing import Callable
import logging

import numpy as np

from src.synthenv.env import ACTION_DIM, N_FINGERS, EnvParams, EnvState, clamp_to_disc

logger = logging.getLogger(__name__)

EXPERT_NOISE_STD = 0.002
WEAK_EXPERT_PROBABILITY = 0.5

# Object counts as delivered inside this distance; the expert then holds still
GOAL_TOLERANCE = 0.005

PolicyFn = Callable[[EnvState, EnvParams, np.random.Generator], np.ndarray]


class WeakKind(str, Enum):
    """Behaviour of the non-expert share of a mixed dataset"""

    PARTIAL = "partial"
    RANDOM = "random"


def _segment_clearance(start: np.ndarray, end: np.ndarray, point: np.ndarray) -> float:
    """Distance from point to the segment start-end"""
    seg = end - start
    length_sq = float(seg @ seg)
    if length_sq == 0.0:
        return float(np.linalg.norm(point - start))
    t = np.clip(float((point - start) @ seg) / length_sq, 0.0, 1.0)
    return float(np.linalg.norm(start + t * seg - point))


def _pusher_command(finger: np.ndarray, obj: np.ndarray, direction: np.ndarray,
                    distance: float, params: EnvParams) -> np.ndarray:
    r = params.contact_radius
    speed = params.finger_speed_max
    stage = obj - direction * (1.5 * r)

    rel = obj - finger
    rel_dist = float(np.linalg.norm(rel))
    aligned = rel_dist < 1.75 * r and float(rel @ direction) > 0.95 * rel_dist

    if aligned:
        # A finger ending inside the contact radius moves the object by its
        # whole displacement, so only close the gap when that lands on target
        step_len = min(speed, distance)
        gap = rel_dist - r
        lateral = rel - float(rel @ direction) * direction
        if gap <= step_len:
            return step_len * direction + 0.5 * lateral
        return min(gap - 0.005, speed) * direction + 0.5 * lateral

    target = stage
    if _segment_clearance(finger, stage, obj) < 1.25 * r:
        perp = np.array([-direction[1], direction[0]])
        side = 1.0 if float((finger - obj) @ perp) >= 0.0 else -1.0
        ahead = float((finger - obj) @ direction) > 0.0
        target = obj + side * perp * (2.0 * r)
        if not ahead:
            target = target - direction * (1.5 * r)
    return target - finger


def expert_policy(state: EnvState, params: EnvParams, rng: np.random.Generator) -> np.ndarray:
    """
    Proportional push controller

    The finger nearest to the staging point behind the object (opposite the
    goal) walks there, detouring around the object when needed, then pushes
    toward the goal; the other fingers hold station. Gaussian noise of
    std 0.002 is added to every command.

    Args:
        state: Current state
        params: Environment parameters
        rng: Noise source

    Returns:
        Six velocity commands
    """
    action = np.zeros((N_FINGERS, 2))
    obj, goal = state.object_xy, state.goal_xy
    distance = float(np.linalg.norm(goal - obj))

    if distance > GOAL_TOLERANCE:
        direction = (goal - obj) / distance
        stage = obj - direction * (1.5 * params.contact_radius)
        pusher = int(np.argmin(np.linalg.norm(state.finger_xy - stage, axis=1)))
        command = _pusher_command(state.finger_xy[pusher], obj, direction, distance, params)
        action[pusher] = clamp_to_disc(command, params.finger_speed_max)

    return action.ravel() + rng.normal(0.0, EXPERT_NOISE_STD, size=ACTION_DIM)


def random_policy(state: EnvState, params: EnvParams, rng: np.random.Generator) -> np.ndarray:
    """Uniform random commands within the per-dimension action bounds"""
    speed = params.finger_speed_max
    return rng.uniform(-speed, speed, size=ACTION_DIM)


def weak_policy(state: EnvState, params: EnvParams, rng: np.random.Generator) -> np.ndarray:
    """Expert command with probability 0.5 per step, otherwise a random one"""
    if rng.random() < WEAK_EXPERT_PROBABILITY:
        return expert_policy(state, params, rng)
    return random_policy(state, params, rng)


def weak_policy_for(kind: WeakKind) -> PolicyFn:
    return weak_policy if WeakKind(kind) == WeakKind.PARTIAL else random_policy
