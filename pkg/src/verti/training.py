"""Terrain generation on disk, the curriculum training loop and checkpoints."""
from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import elevation as el
from .config import RunConfig
from .curriculum import TerrainSampler
from .errors import VertiError
from .evalbench import TrainingCurvePoint, hash_seed, periodic_eval, write_curve_csv
from .learner import Adam, PolicyController, PolicyParams, compute_gae, ppo_update, LAYOUT, N_PARAMS
from .curriculum import score_trajectory
from .simworld import run_episode

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "verti-checkpoint"
CHECKPOINT_VERSION = 1


class CheckpointError(VertiError):
    pass


# ------------------------------------------------------------------ terrain on disk

def train_name(k: int) -> str:
    return f"terrain_{k:03d}.vwmap"


def test_name(k: int) -> str:
    return f"test_{k:03d}.vwmap"


def make_test_maps(seed: int, count: int, roughness: float, mult: float) -> list[el.ElevationMap]:
    return [el.with_id(el.synth_rugged_endpoint(hash_seed(seed, 1, k), roughness * mult), k)
            for k in range(count)]


def make_training_set(seed: int, count: int, roughness: float) -> el.TerrainSet:
    return el.generate_training_set(el.flat_map(), el.synth_rugged_endpoint(seed, roughness), count)


def generate_terrain(out_dir, count: int, seed: int, roughness: float = 1.0,
                     test_count: int = 5, roughness_mult: float = 1.4,
                     train: bool = True, test: bool = True) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if train:
        for m in make_training_set(seed, count, roughness):
            p = out / train_name(m.id)
            el.write_map(m, p)
            written.append(p)
    if test:
        for m in make_test_maps(seed, test_count, roughness, roughness_mult):
            p = out / test_name(m.id)
            el.write_map(m, p)
            written.append(p)
    return written


def load_terrain_dir(path, prefix: str) -> list[el.ElevationMap]:
    d = Path(path)
    if not d.is_dir():
        raise FileNotFoundError(f"terrain directory {d} does not exist")
    files = sorted(d.glob(f"{prefix}_*.vwmap"))
    if not files:
        raise FileNotFoundError(f"no {prefix}_*.vwmap files in {d}")
    maps = []
    for k, f in enumerate(files):
        if f.name != f"{prefix}_{k:03d}.vwmap":
            raise FileNotFoundError(f"expected {prefix}_{k:03d}.vwmap, found {f.name}")
        maps.append(el.read_map(f, map_id=k))
    return maps


# ------------------------------------------------------------------ training

@dataclass
class TraceRow:
    episode: int
    terrain_id: int
    score: float
    stage: int | None
    sampler_kind: str


@dataclass
class Trainer:
    cfg: RunConfig
    train_maps: list
    test_maps: list
    params: PolicyParams = None
    opt: Adam = None
    sampler: TerrainSampler = None
    rng: np.random.Generator = None
    env_steps: int = 0
    episodes: int = 0
    updates: int = 0
    evals_done: int = 0
    curve: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    losses: list = field(default_factory=list)

    def __post_init__(self):
        c = self.cfg
        if self.params is None:
            self.params = PolicyParams.init(np.random.default_rng(hash_seed(c.seed, 0)))
        if self.opt is None:
            self.opt = Adam(lr=c.lr)
        if self.sampler is None:
            self.sampler = TerrainSampler(c.sampler, len(self.train_maps), c.alpha, c.beta)
        if self.rng is None:
            self.rng = np.random.default_rng(hash_seed(c.seed, 2))
        self._ppo = c.ppo()
        self._ep = c.episode()
        self._w = c.weights()

    def _maybe_eval(self, t0: float, limit: int):
        every = self.cfg.eval_every
        while every > 0 and (self.evals_done + 1) * every <= min(self.env_steps, limit):
            self.evals_done += 1
            nominal = self.evals_done * every
            pt = periodic_eval(self.params, self.test_maps, nominal, self.curve, self._ep,
                               self.cfg.seed, self.cfg.eval_trials, self._w,
                               wall_time_s=time.perf_counter() - t0)
            log.info("steps=%d eval_success=%.3f", nominal, pt.eval_success_rate)

    def _update(self, batch):
        self.params, self.opt, report = ppo_update(self.params, batch, self._ppo, self.rng, self.opt)
        self.updates += 1
        self.losses.append(report)

    def run(self, total_steps: int | None = None, checkpoint_path=None) -> "Trainer":
        """Train until ``total_steps`` environment steps have been collected."""
        total = self.cfg.steps if total_steps is None else total_steps
        t0 = time.perf_counter()
        pending = []
        while self.env_steps < total:
            tid = self.sampler.next(self.rng)
            traj = run_episode(self.train_maps[tid], PolicyController(self.params), self._ep,
                               self.rng, self._w)
            compute_gae(traj, self._ppo.gamma, self._ppo.lam, self._ppo.reward_scale)
            score = score_trajectory(traj, self._ppo.gamma, self._ppo.lam)
            self.sampler.observe(tid, score, traj.success)
            self.trace.append(TraceRow(self.episodes, tid, score, self.sampler.stage,
                                       self.sampler.kind.value))
            self.episodes += 1
            self.env_steps += len(traj)
            pending.append(traj)
            self._maybe_eval(t0, total)
            if (len(pending) >= self._ppo.rollout_episodes
                    and sum(len(t) for t in pending) >= self._ppo.min_rollout_steps):
                self._update(pending)
                pending = []
                if checkpoint_path and self.updates % self.cfg.checkpoint_every == 0:
                    save_checkpoint(self, checkpoint_path)
        if pending:
            self._update(pending)
        if checkpoint_path:
            save_checkpoint(self, checkpoint_path)
        return self

    # -------------------------------------------------------------- artifacts

    def write_artifacts(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_curve_csv(self.curve, out / "curve.csv")
        write_trace_csv(self.trace, out / "trace.csv")


def write_trace_csv(rows: list[TraceRow], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["episode", "terrain_id", "score", "stage", "sampler_kind"])
        for r in rows:
            w.writerow([r.episode, r.terrain_id, repr(float(r.score)),
                        "" if r.stage is None else r.stage, r.sampler_kind])


def read_trace_csv(path) -> list[TraceRow]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return [TraceRow(int(r["episode"]), int(r["terrain_id"]), float(r["score"]),
                     int(r["stage"]) if r["stage"] else None, r["sampler_kind"]) for r in rows]


# ------------------------------------------------------------------ checkpoints

def _floats(a) -> list:
    return [float(x) for x in a]


def save_checkpoint(tr: Trainer, path) -> None:
    layout = {k: [off, list(shape)] for k, (off, shape) in LAYOUT.items()}
    blob = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layout": layout,
        "n_params": N_PARAMS,
        "params": _floats(tr.params.flat),
        "config": tr.cfg.to_dict(),
        "ppo": tr.cfg.ppo().__dict__,
        "adam": {"m": _floats(tr.opt.m), "v": _floats(tr.opt.v), "t": tr.opt.t, "lr": tr.opt.lr},
        "rng_state": tr.rng.bit_generator.state,
        "sampler": tr.sampler.to_dict(),
        "env_steps": tr.env_steps,
        "episodes": tr.episodes,
        "updates": tr.updates,
        "evals_done": tr.evals_done,
        "curve": [[p.env_steps, p.eval_success_rate] for p in tr.curve],
        "trace": [[r.episode, r.terrain_id, r.score, r.stage, r.sampler_kind] for r in tr.trace],
    }
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(blob))
    tmp.replace(path)


def _read_blob(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"checkpoint {p} not found")
    try:
        blob = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"corrupt checkpoint {p}: {exc}") from None
    if not isinstance(blob, dict) or blob.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{p} is not a verti checkpoint")
    if blob.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {blob.get('version')}")
    if blob.get("n_params") != N_PARAMS or len(blob.get("params", [])) != N_PARAMS:
        raise CheckpointError("checkpoint parameter count does not match the network")
    return blob


def load_params(path) -> PolicyParams:
    return PolicyParams(np.array(_read_blob(path)["params"], dtype=np.float64))


def load_trainer(path, train_maps, test_maps, cfg: RunConfig | None = None) -> Trainer:
    blob = _read_blob(path)
    try:
        cfg = cfg or RunConfig(**blob["config"])
        rng = np.random.default_rng()
        rng.bit_generator.state = blob["rng_state"]
        a = blob["adam"]
        tr = Trainer(
            cfg, train_maps, test_maps,
            params=PolicyParams(np.array(blob["params"], dtype=np.float64)),
            opt=Adam(lr=a["lr"], m=np.array(a["m"]), v=np.array(a["v"]), t=int(a["t"])),
            sampler=TerrainSampler.from_dict(blob["sampler"]),
            rng=rng,
            env_steps=int(blob["env_steps"]), episodes=int(blob["episodes"]),
            updates=int(blob["updates"]), evals_done=int(blob["evals_done"]),
            curve=[TrainingCurvePoint(int(s), float(r)) for s, r in blob["curve"]],
            trace=[TraceRow(*row) for row in blob["trace"]],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from None
    if tr.sampler.count != len(train_maps):
        raise CheckpointError("checkpoint was trained on a different number of terrains")
    return tr
