"""Run configuration: defaults < config file < command-line flags.

The config file is flat ``key = value`` text; ``#`` starts a comment.
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .learner import PpoConfig
from .planners import NpConfig
from .reward import RewardWeights
from .simworld import EpisodeConfig


@dataclass
class RunConfig:
    seed: int = 1
    # terrain
    terrain_count: int = 100
    test_count: int = 5
    roughness: float = 1.0
    roughness_mult: float = 1.4
    # curriculum
    sampler: str = "vs"
    alpha: float = 0.1
    beta: float = 0.1
    # learner
    gamma: float = 0.99
    lam: float = 0.95
    clip: float = 0.2
    lr: float = 3e-4
    epochs: int = 10
    minibatch: int = 64
    rollout_episodes: int = 8
    min_rollout_steps: int = 1024
    vf_coef: float = 0.5
    ent_coef: float = 0.0
    reward_scale: float = 0.01
    max_grad_norm: float = 0.5
    # reward (time_limit doubles as T)
    w1: float = 50.0
    w2: float = 10.0
    w3: float = 20.0
    w4: float = 10.0
    rollover_alpha_deg: float = 30.0
    timeout_c: float = 100.0
    time_limit: float = 20.0
    # simulator
    dt: float = 0.1
    goal_radius: float = 0.15
    rollover_limit: float = 0.785
    # naive planner
    np_w_mean: float = 1.0
    np_w_var: float = 2.0
    np_sector_length: float = 0.6
    np_sector_halfwidth: float = 0.15
    # training loop / evaluation
    steps: int = 200_000
    eval_every: int = 10_000
    eval_trials: int = 20
    trials: int = 50
    checkpoint_every: int = 10
    out: str = ""

    def __post_init__(self):
        if not self.out:
            self.out = os.environ.get("VERTI_OUT", "runs")
        if self.sampler not in ("vs", "vr", "mc"):
            raise ValueError(f"unknown sampler {self.sampler!r}")

    def ppo(self) -> PpoConfig:
        return PpoConfig(self.gamma, self.lam, self.clip, self.lr, self.epochs, self.minibatch,
                         self.rollout_episodes, self.min_rollout_steps, self.vf_coef, self.ent_coef,
                         self.reward_scale, self.max_grad_norm)

    def weights(self) -> RewardWeights:
        return RewardWeights(self.w1, self.w2, self.w3, self.w4, self.rollover_alpha_deg,
                             self.timeout_c, self.time_limit)

    def episode(self) -> EpisodeConfig:
        return EpisodeConfig(dt=self.dt, time_limit=self.time_limit, goal_radius=self.goal_radius,
                             rollover_limit=self.rollover_limit)

    def naive_planner(self) -> NpConfig:
        return NpConfig(sector_length=self.np_sector_length,
                        sector_halfwidth=self.np_sector_halfwidth,
                        w_mean=self.np_w_mean, w_var=self.np_w_var)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in fields(RunConfig)}


def coerce(key: str, raw):
    if key not in _FIELDS:
        raise KeyError(f"unknown config key {key!r}")
    kind = type(_FIELDS[key].default)
    if kind is int and isinstance(raw, str):
        return int(raw.replace("_", ""))
    return kind(raw)


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            out[key] = coerce(key, val)
        except (KeyError, ValueError) as exc:
            raise ValueError(f"config line {lineno}: {exc}") from None
    return out


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    values = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text()))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = coerce(k, v)
    return RunConfig(**values)
