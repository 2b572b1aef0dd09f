"""Terrain samplers.

``VS`` keeps a learning-potential score and a last-visit stamp per terrain
and draws from a mixture of a rank-prioritised score distribution and a
staleness distribution. ``VR`` is uniform; ``MC`` is a five-stage
difficulty ladder gated on recent success rate.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DimensionError, ParameterError, RangeError
from .learner import compute_gae
from .trajectory import Trajectory


class SamplerKind(str, Enum):
    VS = "vs"
    VR = "vr"
    MC = "mc"


@dataclass
class CurriculumState:
    u: np.ndarray
    v: np.ndarray
    n: int
    seen: np.ndarray
    alpha: float = 0.1
    beta: float = 0.1

    @classmethod
    def fresh(cls, count: int, alpha: float = 0.1, beta: float = 0.1) -> "CurriculumState":
        if not 0.0 <= alpha <= 1.0:
            raise ParameterError(f"alpha must be in [0, 1], got {alpha}")
        if not beta > 0:
            raise ParameterError(f"beta must be positive, got {beta}")
        return cls(np.zeros(count), np.zeros(count, dtype=np.int64), 0,
                   np.zeros(count, dtype=bool), alpha, beta)

    def __len__(self):
        return len(self.u)

    def to_dict(self) -> dict:
        return {"u": [float(x) for x in self.u], "v": [int(x) for x in self.v], "n": self.n,
                "seen": [bool(x) for x in self.seen], "alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_dict(cls, d: dict) -> "CurriculumState":
        return cls(np.array(d["u"], dtype=np.float64), np.array(d["v"], dtype=np.int64), int(d["n"]),
                   np.array(d["seen"], dtype=bool), float(d["alpha"]), float(d["beta"]))


def score_trajectory(traj: Trajectory, gamma: float, lam: float) -> float:
    """Mean absolute GAE over the episode."""
    if len(traj) == 0:
        raise ValueError("cannot score an empty trajectory")
    if traj.advantages is None:
        compute_gae(traj, gamma, lam)
    return float(np.mean(np.abs(traj.advantages)))


def ranks(u: np.ndarray, seen: np.ndarray) -> np.ndarray:
    """1-based descending ranks over seen entries (ties: lower id first); 0 if unseen."""
    ids = np.flatnonzero(seen)
    # stable sort keeps lower ids first among equal scores
    order = ids[np.argsort(-u[ids], kind="stable")]
    r = np.zeros(len(u), dtype=np.int64)
    r[order] = np.arange(1, len(order) + 1)
    return r


def rank_distribution(u, beta: float, seen) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    seen = np.asarray(seen, dtype=bool)
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    if not seen.any():
        raise ParameterError("rank distribution needs at least one seen terrain")
    r = ranks(u, seen)
    w = np.zeros(len(u))
    w[seen] = r[seen].astype(np.float64) ** (-beta)
    return w / w.sum()


def staleness_distribution(v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.int64)
    if len(v) and v.max() > n:
        raise ParameterError("last-visit stamps cannot exceed the episode count")
    w = (n - v).astype(np.float64)
    total = w.sum()
    if total == 0:
        return np.full(len(v), 1.0 / len(v))
    return w / total


def mixture(qu, qv, alpha: float) -> np.ndarray:
    qu = np.asarray(qu, dtype=np.float64)
    qv = np.asarray(qv, dtype=np.float64)
    if qu.shape != qv.shape:
        raise DimensionError(f"distribution lengths differ: {qu.shape} vs {qv.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must be in [0, 1], got {alpha}")
    if alpha == 0.0:
        return qu.copy()
    if alpha == 1.0:
        return qv.copy()
    return (1.0 - alpha) * qu + alpha * qv


def vs_distribution(state: CurriculumState) -> np.ndarray:
    return mixture(rank_distribution(state.u, state.beta, state.seen),
                   staleness_distribution(state.v, state.n), state.alpha)


def draw_index(p: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw over ids in ascending order, one uniform variate."""
    cdf = p.cumsum()
    x = rng.random() * cdf[-1]
    return min(int(cdf.searchsorted(x, side="right")), len(p) - 1)


def sample(state: CurriculumState, rng: np.random.Generator) -> int:
    if not state.seen.all():
        return int(np.argmin(state.seen))
    return draw_index(vs_distribution(state), rng)


def update(state: CurriculumState, terrain_id: int, score: float) -> CurriculumState:
    if not 0 <= terrain_id < len(state):
        raise RangeError(f"terrain id {terrain_id} outside [0, {len(state)})")
    if not score >= 0:
        raise ParameterError(f"score must be non-negative, got {score}")
    state.u[terrain_id] = score
    state.v[terrain_id] = state.n
    state.n += 1
    state.seen[terrain_id] = True
    return state


# ------------------------------------------------------------------ baselines

MC_THRESHOLDS = (1.0, 1.0, 0.8, 0.6)
MC_STAGES = 5


@dataclass
class McState:
    stage: int = 0
    thresholds: tuple = MC_THRESHOLDS
    window: deque = field(default_factory=lambda: deque(maxlen=10))

    def to_dict(self) -> dict:
        return {"stage": self.stage, "window": [bool(x) for x in self.window],
                "capacity": self.window.maxlen}

    @classmethod
    def from_dict(cls, d: dict) -> "McState":
        return cls(int(d["stage"]), MC_THRESHOLDS, deque(d["window"], maxlen=int(d["capacity"])))


def mc_band(stage: int, terrain_count: int) -> tuple[int, int]:
    lo = stage * terrain_count // MC_STAGES
    hi = (stage + 1) * terrain_count // MC_STAGES
    if stage == MC_STAGES - 1:
        hi = terrain_count
    lo = min(lo, terrain_count - 1)
    return lo, max(hi, lo + 1)


def mc_next(state: McState, terrain_count: int, last_success: bool | None,
            rng: np.random.Generator) -> int:
    """Record the last outcome, maybe advance a stage, then draw from the stage band.

    ``last_success=None`` (first episode) records nothing.
    """
    if last_success is not None:
        state.window.append(bool(last_success))
        full = len(state.window) == state.window.maxlen
        if full and state.stage < len(state.thresholds):
            rate = sum(state.window) / len(state.window)
            if rate >= state.thresholds[state.stage]:
                state.stage += 1
                state.window.clear()
    lo, hi = mc_band(state.stage, terrain_count)
    return int(rng.integers(lo, hi))


def vr_next(terrain_count: int, rng: np.random.Generator) -> int:
    return int(rng.integers(0, terrain_count))


class TerrainSampler:
    """One interface over the three samplers for the training loop."""

    def __init__(self, kind: SamplerKind | str, count: int, alpha: float = 0.1, beta: float = 0.1):
        self.kind = SamplerKind(kind)
        self.count = count
        self.vs = CurriculumState.fresh(count, alpha, beta)
        self.mc = McState()
        self._last_success: bool | None = None

    def next(self, rng: np.random.Generator) -> int:
        if self.kind is SamplerKind.VS:
            return sample(self.vs, rng)
        if self.kind is SamplerKind.VR:
            return vr_next(self.count, rng)
        return mc_next(self.mc, self.count, self._last_success, rng)

    def observe(self, terrain_id: int, score: float, success: bool) -> None:
        # VS bookkeeping runs for every kind so traces carry scores
        update(self.vs, terrain_id, score)
        self._last_success = success

    @property
    def stage(self) -> int | None:
        return self.mc.stage if self.kind is SamplerKind.MC else None

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "count": self.count, "vs": self.vs.to_dict(),
                "mc": self.mc.to_dict(), "last_success": self._last_success}

    @classmethod
    def from_dict(cls, d: dict) -> "TerrainSampler":
        s = cls(d["kind"], int(d["count"]), d["vs"]["alpha"], d["vs"]["beta"])
        s.vs = CurriculumState.from_dict(d["vs"])
        s.mc = McState.from_dict(d["mc"])
        s._last_success = d["last_success"]
        return s
