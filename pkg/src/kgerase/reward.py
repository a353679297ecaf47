"""Reward for ranking rewrites and its privacy-penalty schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

from kgerase.errors import InvalidRateError

# discount factor of the RL stage; exported for external trainers, unused here
GAMMA = 0.99


@dataclass(frozen=True)
class RewardParams:
    p_init: float = 20.0
    p_step: float = 5.0
    step_interval: int = 350
    p_max: float = 40.0

    def __post_init__(self) -> None:
        if self.p_init <= 0 or self.p_step <= 0 or self.p_max <= 0:
            raise ValueError("penalty parameters must be positive")
        if self.step_interval <= 0:
            raise ValueError("step_interval must be a positive integer")
        if self.p_init > self.p_max:
            raise ValueError("p_init must not exceed p_max")


def _check_rate(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):  # also rejects NaN
        raise InvalidRateError(f"{name} must lie in [0, 1], got {value!r}")


def privacy_only_reward(r_pri: float, p: float) -> float:
    _check_rate("r_pri", r_pri)
    return math.exp(-p * r_pri)


def reward(r_pub: float, r_pri: float, p: float) -> float:
    """``r_pub * exp(-p * r_pri)``: linear in kept public facts, exponential penalty on leaks."""
    _check_rate("r_pub", r_pub)
    return r_pub * privacy_only_reward(r_pri, p)


def p_schedule(iteration: int, params: RewardParams = RewardParams()) -> float:
    if iteration < 0:
        raise ValueError("iteration must be non-negative")
    steps = iteration // params.step_interval
    return min(params.p_init + params.p_step * steps, params.p_max)
