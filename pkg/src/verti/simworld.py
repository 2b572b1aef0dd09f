"""2.5-D kinematic vehicle on a heightmap.

The vehicle is a bicycle model whose attitude comes from a least-squares
plane under its footprint; uphill grade eats into the achievable speed
through a traction limit. There is no contact or suspension model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Protocol, Sequence

import numpy as np

from . import reward as rw
from .elevation import ElevationMap, extract_patch, sample_heights
from .trajectory import Trajectory

MAX_SPEED = 4.0  # m/s
MAX_STEER = 0.524  # rad, ~30 deg
WHEELBASE = 0.52  # m
FRICTION = 0.9
BODY_LENGTH = 0.863
BODY_WIDTH = 0.249
FEATURE_SCALE = 0.5  # m; patch heights are divided by this
STATE_DIM = 18

TERMINALS = ("none", "goal", "timeout", "rollover")


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    return math.pi - (math.pi - a) % (2.0 * math.pi)


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    heading: float
    speed: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0
    t: float = 0.0
    z: float = 0.0


def _clamp_unit(v) -> float:
    v = float(v)
    if not math.isfinite(v):
        return 0.0
    return min(1.0, max(-1.0, v))


@dataclass(frozen=True)
class Action:
    steer: float = 0.0
    speed_cmd: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "steer", _clamp_unit(self.steer))
        object.__setattr__(self, "speed_cmd", _clamp_unit(self.speed_cmd))


@dataclass(frozen=True)
class EpisodeConfig:
    start_xy: tuple[float, float] = (0.65, 0.3)
    goal_xy: tuple[float, float] = (0.65, 2.8)
    start_heading: float | None = None  # None: face the goal
    dt: float = 0.1
    time_limit: float = 20.0
    goal_radius: float = 0.15
    rollover_limit: float = 0.785

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.time_limit >= self.dt:
            raise ValueError("time_limit must be >= dt")
        if not self.goal_radius > 0:
            raise ValueError("goal_radius must be positive")

    @property
    def max_steps(self) -> int:
        return math.ceil(round(self.time_limit / self.dt, 9))


@dataclass(frozen=True)
class StepOutcome:
    next_state: VehicleState
    state_vec: np.ndarray
    reward: float
    terminal: str
    delta_d: float


@lru_cache(maxsize=4)
def _footprint(n_along: int = 11, n_across: int = 5):
    s = ((np.arange(n_along) + 0.5) / n_along - 0.5) * BODY_LENGTH
    l = ((np.arange(n_across) + 0.5) / n_across - 0.5) * BODY_WIDTH
    S, L = np.meshgrid(s, l, indexing="ij")
    S, L = S.ravel(), L.ravel()
    design = np.column_stack([np.ones_like(S), S, L])
    solve = np.linalg.pinv(design)
    for a in (S, L, solve):
        a.setflags(write=False)
    return S, L, solve


def fit_plane(emap: ElevationMap, x: float, y: float, heading: float) -> tuple[float, float, float]:
    """(roll, pitch, z) of the plane fitted under the vehicle footprint.

    Pitch is positive nose-up, roll positive when the left side is higher.
    """
    x = min(max(x, 0.0), emap.width_m)
    y = min(max(y, 0.0), emap.height_m)
    S, L, solve = _footprint()
    c, s = math.cos(heading), math.sin(heading)
    xs = x + S * c - L * s
    ys = y + S * s + L * c
    z0, g_along, g_left = solve @ sample_heights(emap, xs, ys)
    return math.atan(g_left), math.atan(g_along), float(z0)


def pool_encoder(patch: np.ndarray) -> np.ndarray:
    """4x4 average pool of the patch, scaled by 0.5 m and clipped to [-1, 1]."""
    n = patch.shape[0] // 4
    pooled = patch[:4 * n, :4 * n].reshape(4, n, 4, n).mean(axis=(1, 3)).ravel()
    return np.clip(pooled / FEATURE_SCALE, -1.0, 1.0)


def goal_bearing(state: VehicleState, goal_xy: Sequence[float]) -> float:
    return math.atan2(goal_xy[1] - state.y, goal_xy[0] - state.x)


def encode_state(emap: ElevationMap, state: VehicleState, goal_xy: Sequence[float],
                 encoder: Callable[[np.ndarray], np.ndarray] = pool_encoder) -> np.ndarray:
    patch = extract_patch(emap, (state.x, state.y), state.heading)
    vec = np.empty(STATE_DIM)
    vec[:16] = encoder(patch)
    vec[16] = wrap_angle(goal_bearing(state, goal_xy) - state.heading) / math.pi
    vec[17] = min(1.0, max(-1.0, state.speed / MAX_SPEED))
    return vec


def initial_state(emap: ElevationMap, cfg: EpisodeConfig) -> VehicleState:
    x, y = cfg.start_xy
    heading = cfg.start_heading
    if heading is None:
        heading = math.atan2(cfg.goal_xy[1] - y, cfg.goal_xy[0] - x)
    heading = wrap_angle(heading)
    roll, pitch, z = fit_plane(emap, x, y, heading)
    return VehicleState(x, y, heading, 0.0, roll, pitch, 0.0, z)


def _dist(ax, ay, b) -> float:
    return math.hypot(b[0] - ax, b[1] - ay)


def step(emap: ElevationMap, state: VehicleState, action: Action, cfg: EpisodeConfig,
         weights: rw.RewardWeights = rw.DEFAULT_WEIGHTS,
         encoder: Callable[[np.ndarray], np.ndarray] = pool_encoder) -> StepOutcome:
    """Advance one ``cfg.dt``.

    If the straight motion segment passes within ``goal_radius`` of the
    goal, the vehicle stops at the closest point of approach, so a fast
    vehicle cannot tunnel through the goal disc.
    """
    dt = cfg.dt
    delta = MAX_STEER * action.steer
    v = MAX_SPEED * action.speed_cmd
    uphill = state.pitch if v >= 0 else -state.pitch
    v_eff = v * max(0.0, 1.0 - math.tan(max(0.0, uphill)) / FRICTION)

    c, s = math.cos(state.heading), math.sin(state.heading)
    dx, dy = v_eff * dt * c, v_eff * dt * s
    frac = 1.0
    gx, gy = cfg.goal_xy
    seg2 = dx * dx + dy * dy
    if seg2 > 0.0:
        proj = ((gx - state.x) * dx + (gy - state.y) * dy) / seg2
        proj = min(1.0, max(0.0, proj))
        if _dist(state.x + proj * dx, state.y + proj * dy, cfg.goal_xy) <= cfg.goal_radius:
            frac = proj
    x = min(max(state.x + frac * dx, 0.0), emap.width_m)
    y = min(max(state.y + frac * dy, 0.0), emap.height_m)
    heading = wrap_angle(state.heading + (v_eff / WHEELBASE) * math.tan(delta) * dt * frac)
    roll, pitch, z = fit_plane(emap, x, y, heading)
    t = round(state.t + dt, 9)

    d_prev = _dist(state.x, state.y, cfg.goal_xy)
    d_now = _dist(x, y, cfg.goal_xy)
    if d_now <= cfg.goal_radius:
        terminal = "goal"
    elif t >= cfg.time_limit:
        terminal = "timeout"
    elif abs(roll) > cfg.rollover_limit or abs(pitch) > cfg.rollover_limit:
        terminal = "rollover"
    else:
        terminal = "none"

    nxt = VehicleState(x, y, heading, v_eff, roll, pitch, t, z)
    delta_d = d_prev - d_now
    # the timeout term only fires on the step that ends the episode
    t_pen = max(t, weights.T) if terminal == "timeout" else 0.0
    r = rw.total_reward(delta_d, math.degrees(roll), math.degrees(pitch), d_now, t_pen, weights)
    return StepOutcome(nxt, encode_state(emap, nxt, cfg.goal_xy, encoder), r, terminal, delta_d)


@dataclass
class Decision:
    action: Action
    raw: np.ndarray | None = None
    log_prob: float = 0.0
    value: float = 0.0


class Controller(Protocol):
    def __call__(self, emap: ElevationMap, state: VehicleState, state_vec: np.ndarray,
                 cfg: EpisodeConfig, rng: np.random.Generator) -> Decision: ...


def run_episode(emap: ElevationMap, controller: Controller, cfg: EpisodeConfig,
                rng: np.random.Generator,
                weights: rw.RewardWeights = rw.DEFAULT_WEIGHTS,
                encoder: Callable[[np.ndarray], np.ndarray] = pool_encoder) -> Trajectory:
    state = initial_state(emap, cfg)
    vec = encode_state(emap, state, cfg.goal_xy, encoder)
    rec = Trajectory.builder()
    terminal = "none"
    for _ in range(cfg.max_steps):
        dec = controller(emap, state, vec, cfg, rng)
        act = dec.action
        raw = dec.raw if dec.raw is not None else (act.steer, act.speed_cmd)
        out = step(emap, state, act, cfg, weights, encoder)
        st = out.next_state
        rec.append(state_vec=vec, action=(act.steer, act.speed_cmd), raw_action=raw,
                   log_prob=dec.log_prob, value=dec.value, reward=out.reward,
                   delta_d=out.delta_d, roll=st.roll, pitch=st.pitch, x=st.x, y=st.y,
                   heading=st.heading, speed=st.speed, t=st.t)
        state, vec, terminal = st, out.state_vec, out.terminal
        if terminal != "none":
            break
    return rec.build(terminal=terminal, terrain_id=emap.id)
