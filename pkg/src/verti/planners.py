"""Non-learning baselines: an optimistic heading tracker and a naive
elevation-aware direction picker."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .elevation import ElevationMap, sample_heights
from .simworld import MAX_STEER, Action, Decision, VehicleState, goal_bearing, wrap_angle

K_P = 1.0
BASE_SPEED_CMD = 0.5


@dataclass(frozen=True)
class NpConfig:
    n_candidates: int = 7
    span_deg: float = 60.0
    sector_length: float = 0.6
    sector_halfwidth: float = 0.15
    w_mean: float = 1.0
    w_var: float = 2.0

    def __post_init__(self):
        if self.n_candidates < 1 or self.n_candidates % 2 == 0:
            raise ValueError("candidate count must be odd so the goal bearing is a candidate")
        if self.w_mean < 0 or self.w_var < 0:
            raise ValueError("cost weights must be non-negative")

    def offsets(self) -> np.ndarray:
        half = self.n_candidates // 2
        if half == 0:
            return np.zeros(1)
        return np.radians(self.span_deg) * np.arange(-half, half + 1) / half


def steer_towards(state: VehicleState, target_heading: float) -> float:
    err = wrap_angle(target_heading - state.heading)
    return min(1.0, max(-1.0, K_P * err / MAX_STEER))


def op_act(state: VehicleState, goal_xy) -> Action:
    return Action(steer_towards(state, goal_bearing(state, goal_xy)), BASE_SPEED_CMD)


@lru_cache(maxsize=4)
def _strip(length: float, halfwidth: float, n_along: int = 12, n_across: int = 5):
    s = np.linspace(length / n_along, length, n_along)
    l = np.linspace(-halfwidth, halfwidth, n_across)
    S, L = np.meshgrid(s, l, indexing="ij")
    return S.ravel(), L.ravel()


def sector_cost(heights: np.ndarray, cfg: NpConfig) -> float:
    return float(cfg.w_mean * np.mean(np.abs(heights)) + cfg.w_var * np.var(heights))


def sector_heights(emap: ElevationMap, state: VehicleState, direction: float, cfg: NpConfig) -> np.ndarray:
    """Heights in a forward strip along ``direction``, relative to the ground under the vehicle."""
    S, L = _strip(cfg.sector_length, cfg.sector_halfwidth)
    c, s = math.cos(direction), math.sin(direction)
    xs = state.x + S * c - L * s
    ys = state.y + S * s + L * c
    ground = sample_heights(emap, np.array([state.x]), np.array([state.y]))[0]
    return sample_heights(emap, xs, ys) - ground


def np_choose_heading(emap: ElevationMap, state: VehicleState, goal_xy, cfg: NpConfig):
    """Returns ``(chosen_heading, min_cost, candidate_headings, costs)``."""
    bearing = goal_bearing(state, goal_xy)
    offs = cfg.offsets()
    cands = np.array([wrap_angle(bearing + o) for o in offs])
    costs = np.array([sector_cost(sector_heights(emap, state, h, cfg), cfg) for h in cands])
    # ties: closest to the goal bearing, then the lower bearing
    best = min(range(len(cands)), key=lambda k: (costs[k], abs(offs[k]), offs[k]))
    return float(cands[best]), float(costs[best]), cands, costs


def np_act(emap: ElevationMap, state: VehicleState, goal_xy, cfg: NpConfig = NpConfig()) -> Action:
    heading, cost, _, _ = np_choose_heading(emap, state, goal_xy, cfg)
    return Action(steer_towards(state, heading), BASE_SPEED_CMD / (1.0 + cost))


class OptimisticPlanner:
    name = "op"

    def __call__(self, emap, state, state_vec, cfg, rng) -> Decision:
        return Decision(op_act(state, cfg.goal_xy))


class NaivePlanner:
    name = "np"

    def __init__(self, cfg: NpConfig = NpConfig()):
        self.cfg = cfg

    def __call__(self, emap, state, state_vec, cfg, rng) -> Decision:
        return Decision(np_act(emap, state, cfg.goal_xy, self.cfg))


PLANNERS = {"op": OptimisticPlanner, "np": NaivePlanner}
