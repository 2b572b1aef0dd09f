"""Per-step reward: progress, rollover and timeout terms."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RewardWeights:
    w1: float = 50.0
    w2: float = 10.0
    w3: float = 20.0
    w4: float = 10.0
    alpha: float = 30.0  # degrees
    c: float = 100.0
    T: float = 20.0  # seconds

    def __post_init__(self):
        for name in ("w1", "w2", "w3", "w4", "alpha", "c", "T"):
            if not getattr(self, name) > 0:
                raise ValueError(f"reward weight {name} must be positive")


DEFAULT_WEIGHTS = RewardWeights()

# movement below this (m per step) counts as stalled
STALL_DISTANCE = 0.01


def progress_reward(delta_d: float, w: RewardWeights = DEFAULT_WEIGHTS) -> float:
    return w.w1 * delta_d - w.w2 * float(delta_d < STALL_DISTANCE)


def rollover_penalty(roll: float, pitch: float, w: RewardWeights = DEFAULT_WEIGHTS) -> float:
    """Angles in degrees."""
    excess = max(0.0, abs(roll) - w.alpha) + max(0.0, abs(pitch) - w.alpha)
    return -w.w3 * excess


def timeout_penalty(d_remain: float, t: float, w: RewardWeights = DEFAULT_WEIGHTS) -> float:
    if t >= w.T:
        return -(w.w4 * d_remain + w.c)
    return 0.0


def total_reward(delta_d: float, roll: float, pitch: float, d_remain: float, t: float,
                 w: RewardWeights = DEFAULT_WEIGHTS) -> float:
    return (progress_reward(delta_d, w)
            + rollover_penalty(roll, pitch, w)
            + timeout_penalty(d_remain, t, w))
