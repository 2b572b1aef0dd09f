from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

_PER_STEP = ("state_vec", "action", "raw_action", "log_prob", "value", "reward",
             "delta_d", "roll", "pitch", "x", "y", "heading", "speed", "t")


@dataclass
class Trajectory:
    """One episode, stored column-wise.

    ``td_errors``, ``advantages`` and ``returns`` stay ``None`` until
    :func:`verti.learner.compute_gae` fills them in. Angles are radians.
    """

    states: np.ndarray
    actions: np.ndarray
    raw_actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    delta_d: np.ndarray
    roll: np.ndarray
    pitch: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    speed: np.ndarray
    t: np.ndarray
    terminal: str = "none"
    terrain_id: int | None = None
    td_errors: np.ndarray | None = None
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None

    def __len__(self):
        return len(self.rewards)

    @property
    def success(self) -> bool:
        return self.terminal == "goal"

    @property
    def duration(self) -> float:
        return float(self.t[-1]) if len(self) else 0.0

    @classmethod
    def builder(cls) -> "_Builder":
        return _Builder()

    @classmethod
    def from_rewards_values(cls, rewards, values, terminal="goal", terrain_id=None) -> "Trajectory":
        """Bare trajectory carrying only rewards and values (other columns zero)."""
        r = np.asarray(rewards, dtype=np.float64)
        v = np.asarray(values, dtype=np.float64)
        n = len(r)
        z = np.zeros(n)
        return cls(np.zeros((n, 18)), np.zeros((n, 2)), np.zeros((n, 2)), z.copy(), v, r,
                   z.copy(), z.copy(), z.copy(), z.copy(), z.copy(), z.copy(), z.copy(),
                   np.arange(1, n + 1) * 0.1, terminal, terrain_id)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "y", "heading", "speed", "roll", "pitch", "reward"])
        for i in range(len(self)):
            w.writerow([repr(float(getattr(self, k)[i]))
                        for k in ("t", "x", "y", "heading", "speed", "roll", "pitch", "rewards")])
        return buf.getvalue()


class _Builder:
    def __init__(self):
        self.cols: dict[str, list] = {k: [] for k in _PER_STEP}

    def append(self, **kw):
        for k in _PER_STEP:
            self.cols[k].append(kw[k])

    def build(self, terminal: str, terrain_id: int | None) -> Trajectory:
        c = self.cols
        n = len(c["reward"])

        def arr(k, width=None):
            a = np.asarray(c[k], dtype=np.float64)
            return a.reshape(n, width) if width else a.reshape(n)

        return Trajectory(
            states=arr("state_vec", 18), actions=arr("action", 2), raw_actions=arr("raw_action", 2),
            log_probs=arr("log_prob"), values=arr("value"), rewards=arr("reward"),
            delta_d=arr("delta_d"), roll=arr("roll"), pitch=arr("pitch"), x=arr("x"), y=arr("y"),
            heading=arr("heading"), speed=arr("speed"), t=arr("t"),
            terminal=terminal, terrain_id=terrain_id,
        )
