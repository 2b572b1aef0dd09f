"""PPO with GAE on a fixed actor-critic MLP, differentiated by hand.

Network: a shared ReLU trunk 18-64-128-64-32 feeding an actor head
(32-64-64-2, tanh-squashed means, state-independent log-stds) and a
critic head (32-64-64-1). All parameters live in one flat float64 vector;
:data:`LAYOUT` maps names to slices.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import NonFiniteLossError
from .simworld import Action, Decision, STATE_DIM
from .trajectory import Trajectory

TRUNK = (STATE_DIM, 64, 128, 64, 32)
ACTOR = (32, 64, 64, 2)
CRITIC = (32, 64, 64, 1)
LOG_STD_MIN, LOG_STD_MAX = -5.0, 1.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _build_layout():
    layout = {}
    off = 0

    def add(name, shape):
        nonlocal off
        size = int(np.prod(shape))
        layout[name] = (off, shape)
        off += size

    for prefix, sizes in (("trunk", TRUNK), ("actor", ACTOR), ("critic", CRITIC)):
        for k in range(len(sizes) - 1):
            add(f"{prefix}{k}.W", (sizes[k], sizes[k + 1]))
            add(f"{prefix}{k}.b", (sizes[k + 1],))
    add("log_std", (2,))
    return layout, off


LAYOUT, N_PARAMS = _build_layout()


@dataclass
class PpoConfig:
    gamma: float = 0.99
    lam: float = 0.95
    clip: float = 0.2
    lr: float = 3e-4
    epochs: int = 10
    minibatch: int = 64
    rollout_episodes: int = 8
    min_rollout_steps: int = 1024  # an update also waits for this many transitions
    vf_coef: float = 0.5
    ent_coef: float = 0.0
    reward_scale: float = 0.01  # value/advantage targets only; logged rewards stay raw
    max_grad_norm: float = 0.5  # 0 disables clipping

    def __post_init__(self):
        if not (0.0 <= self.gamma < 1.0 and 0.0 <= self.lam < 1.0):
            raise ValueError("gamma and lambda must lie in [0, 1)")
        if not self.clip > 0:
            raise ValueError("clip must be positive")


class PolicyParams:
    """Flat parameter vector with named views."""

    def __init__(self, flat: np.ndarray):
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (N_PARAMS,):
            raise ValueError(f"expected {N_PARAMS} parameters, got {flat.shape}")
        self.flat = flat

    def __getitem__(self, name: str) -> np.ndarray:
        off, shape = LAYOUT[name]
        return self.flat[off:off + int(np.prod(shape))].reshape(shape)

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.flat.copy())

    @classmethod
    def zeros(cls) -> "PolicyParams":
        return cls(np.zeros(N_PARAMS))

    @classmethod
    def init(cls, rng: np.random.Generator, log_std: float = -0.5) -> "PolicyParams":
        p = cls.zeros()
        for prefix, sizes, out_gain in (("trunk", TRUNK, None), ("actor", ACTOR, 0.01),
                                        ("critic", CRITIC, 1.0)):
            n = len(sizes) - 1
            for k in range(n):
                fan_in = sizes[k]
                std = math.sqrt(2.0 / fan_in)
                if k == n - 1 and out_gain is not None:
                    std = out_gain / math.sqrt(fan_in)
                p[f"{prefix}{k}.W"][...] = rng.normal(0.0, std, size=(sizes[k], sizes[k + 1]))
        p["log_std"][...] = log_std
        return p


def _dense_stack(p: PolicyParams, prefix: str, n: int, h: np.ndarray, final_relu: bool):
    cache = []
    for k in range(n):
        z = h @ p[f"{prefix}{k}.W"] + p[f"{prefix}{k}.b"]
        cache.append((h, z))
        h = np.maximum(z, 0.0) if (k < n - 1 or final_relu) else z
    return h, cache


def _forward_batch(p: PolicyParams, X: np.ndarray):
    feat, c_trunk = _dense_stack(p, "trunk", len(TRUNK) - 1, X, True)
    za, c_actor = _dense_stack(p, "actor", len(ACTOR) - 1, feat, False)
    v, c_critic = _dense_stack(p, "critic", len(CRITIC) - 1, feat, False)
    mean = np.tanh(za)
    log_std = np.clip(p["log_std"], LOG_STD_MIN, LOG_STD_MAX)
    return mean, log_std, v[:, 0], (c_trunk, c_actor, c_critic)


def forward(params: PolicyParams, state) -> tuple[np.ndarray, np.ndarray, float | np.ndarray]:
    """(means, log_stds, value). Accepts one state or a batch."""
    X = np.asarray(state, dtype=np.float64)
    single = X.ndim == 1
    mean, log_std, v, _ = _forward_batch(params, X.reshape(-1, STATE_DIM))
    if single:
        return mean[0], log_std, float(v[0])
    return mean, log_std, v


def gaussian_log_prob(a: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    z = (a - mean) * np.exp(-log_std)
    return np.sum(-0.5 * z * z - log_std - _HALF_LOG_2PI, axis=-1)


def act(params: PolicyParams, state, rng: np.random.Generator, deterministic: bool = False):
    """Returns ``(action, log_prob, raw_sample, value)``; log_prob is of the raw sample."""
    mean, log_std, value = forward(params, state)
    if deterministic:
        raw = mean.copy()
    else:
        raw = mean + np.exp(log_std) * rng.standard_normal(2)
    lp = float(gaussian_log_prob(raw, mean, log_std))
    return Action(raw[0], raw[1]), lp, raw, value


class PolicyController:
    def __init__(self, params: PolicyParams, deterministic: bool = False):
        self.params = params
        self.deterministic = deterministic

    def __call__(self, emap, state, state_vec, cfg, rng) -> Decision:
        action, lp, raw, value = act(self.params, state_vec, rng, self.deterministic)
        return Decision(action, raw, lp, value)


# ------------------------------------------------------------------ GAE

def gae(td_errors: np.ndarray, gamma: float, lam: float) -> np.ndarray:
    adv = np.empty_like(td_errors)
    acc = 0.0
    decay = gamma * lam
    for t in range(len(td_errors) - 1, -1, -1):
        acc = td_errors[t] + decay * acc
        adv[t] = acc
    return adv


def td_errors(rewards: np.ndarray, values: np.ndarray, gamma: float) -> np.ndarray:
    # every episode ends in a true terminal, so the bootstrap after the last step is 0
    nxt = np.zeros_like(values)
    nxt[:-1] = values[1:]
    return rewards + gamma * nxt - values


def compute_gae(traj: Trajectory, gamma: float, lam: float, reward_scale: float = 1.0) -> Trajectory:
    """Fill in TD errors, advantages and returns.

    ``reward_scale`` multiplies rewards before they meet the value estimates,
    which then live in the scaled units.
    """
    if len(traj) == 0:
        raise ValueError("cannot compute advantages of an empty trajectory")
    traj.td_errors = td_errors(reward_scale * traj.rewards, traj.values, gamma)
    traj.advantages = gae(traj.td_errors, gamma, lam)
    traj.returns = traj.advantages + traj.values
    return traj


# ------------------------------------------------------------------ loss

@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray  # raw (pre-clamp) samples
    old_log_probs: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray

    def __len__(self):
        return len(self.returns)

    def subset(self, idx) -> "Batch":
        return Batch(self.states[idx], self.actions[idx], self.old_log_probs[idx],
                     self.advantages[idx], self.returns[idx])


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    adv = adv - adv.mean()
    std = adv.std()
    return adv / std if std > 0 else adv


def make_batch(trajs: list[Trajectory], normalize: bool = True) -> Batch:
    if not trajs:
        raise ValueError("empty batch")
    adv = np.concatenate([t.advantages for t in trajs])
    return Batch(
        states=np.concatenate([t.states for t in trajs]),
        actions=np.concatenate([t.raw_actions for t in trajs]),
        old_log_probs=np.concatenate([t.log_probs for t in trajs]),
        advantages=normalize_advantages(adv) if normalize else adv,
        returns=np.concatenate([t.returns for t in trajs]),
    )


@dataclass
class LossReport:
    policy_loss: float
    value_loss: float
    entropy: float
    total: float
    clip_frac: float = 0.0


def ppo_loss(params: PolicyParams, batch: Batch, cfg: PpoConfig):
    """Scalar loss pieces; no gradient."""
    mean, log_std, v, _ = _forward_batch(params, batch.states)
    return _loss_terms(mean, log_std, v, batch, cfg)[0]


def _loss_terms(mean, log_std, v, batch: Batch, cfg: PpoConfig):
    lp = gaussian_log_prob(batch.actions, mean, log_std)
    ratio = np.exp(lp - batch.old_log_probs)
    A = batch.advantages
    unclipped = ratio * A
    clipped = np.clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * A
    surr = np.minimum(unclipped, clipped)
    policy_loss = -surr.mean()
    value_loss = np.mean((v - batch.returns) ** 2)
    entropy = float(np.sum(log_std) + log_std.size * (0.5 + _HALF_LOG_2PI))
    total = policy_loss + cfg.vf_coef * value_loss - cfg.ent_coef * entropy
    report = LossReport(float(policy_loss), float(value_loss), entropy, float(total),
                        float(np.mean(np.abs(ratio - 1.0) > cfg.clip)))
    return report, ratio, unclipped <= clipped


def _backprop_stack(p, grad, prefix, n, cache, dh, final_relu):
    for k in range(n - 1, -1, -1):
        h_in, z = cache[k]
        if k < n - 1 or final_relu:
            dz = dh * (z > 0.0)
        else:
            dz = dh
        grad[f"{prefix}{k}.W"][...] += h_in.T @ dz
        grad[f"{prefix}{k}.b"][...] += dz.sum(axis=0)
        dh = dz @ p[f"{prefix}{k}.W"].T
    return dh


def ppo_loss_and_grad(params: PolicyParams, batch: Batch, cfg: PpoConfig):
    """Total PPO loss and its gradient with respect to ``params.flat``."""
    mean, log_std, v, (c_trunk, c_actor, c_critic) = _forward_batch(params, batch.states)
    report, ratio, take_unclipped = _loss_terms(mean, log_std, v, batch, cfg)
    B = len(batch)
    grad = PolicyParams.zeros()

    # d(-mean surr)/d logp: only the unclipped branch carries gradient
    dlp = -(ratio * batch.advantages * take_unclipped) / B
    inv_var = np.exp(-2.0 * log_std)
    diff = batch.actions - mean
    dmean = dlp[:, None] * diff * inv_var
    dlog_std = np.sum(dlp[:, None] * (diff * diff * inv_var - 1.0), axis=0)
    dlog_std -= cfg.ent_coef
    raw_ls = params["log_std"]
    dlog_std *= (raw_ls >= LOG_STD_MIN) & (raw_ls <= LOG_STD_MAX)
    grad["log_std"][...] = dlog_std

    dza = dmean * (1.0 - mean * mean)
    dfeat = _backprop_stack(params, grad, "actor", len(ACTOR) - 1, c_actor, dza, False)
    dv = (cfg.vf_coef * 2.0 / B) * (v - batch.returns)
    dfeat = dfeat + _backprop_stack(params, grad, "critic", len(CRITIC) - 1, c_critic,
                                    dv[:, None], False)
    _backprop_stack(params, grad, "trunk", len(TRUNK) - 1, c_trunk, dfeat, True)
    return report, grad.flat


# ------------------------------------------------------------------ optimiser

@dataclass
class Adam:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray = field(default_factory=lambda: np.zeros(N_PARAMS))
    v: np.ndarray = field(default_factory=lambda: np.zeros(N_PARAMS))
    t: int = 0

    def step(self, flat: np.ndarray, grad: np.ndarray) -> None:
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * grad * grad
        mhat = self.m / (1.0 - self.beta1 ** self.t)
        vhat = self.v / (1.0 - self.beta2 ** self.t)
        flat -= self.lr * mhat / (np.sqrt(vhat) + self.eps)

    def copy(self) -> "Adam":
        return Adam(self.lr, self.beta1, self.beta2, self.eps, self.m.copy(), self.v.copy(), self.t)


def ppo_update(params: PolicyParams, trajs: list[Trajectory], cfg: PpoConfig,
               rng: np.random.Generator, opt: Adam | None = None):
    """Clipped-surrogate PPO epochs over shuffled minibatches.

    Returns ``(new_params, new_opt, report)``; the inputs are never
    modified, so a non-finite loss leaves the caller's state intact.
    """
    batch = make_batch(trajs)
    new = params.copy()
    opt = Adam(lr=cfg.lr) if opt is None else opt.copy()
    n = len(batch)
    reports = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        for lo in range(0, n, cfg.minibatch):
            mb = batch.subset(perm[lo:lo + cfg.minibatch])
            report, g = ppo_loss_and_grad(new, mb, cfg)
            if not (math.isfinite(report.total) and np.all(np.isfinite(g))):
                raise NonFiniteLossError(
                    f"non-finite PPO loss (policy={report.policy_loss}, value={report.value_loss}); "
                    "update aborted")
            if cfg.max_grad_norm > 0:
                norm = math.sqrt(float(g @ g))
                if norm > cfg.max_grad_norm:
                    g = g * (cfg.max_grad_norm / norm)
            opt.step(new.flat, g)
            np.clip(new["log_std"], LOG_STD_MIN, LOG_STD_MAX, out=new["log_std"])
            reports.append(report)
    if not np.all(np.isfinite(new.flat)):
        raise NonFiniteLossError("parameters became non-finite; update aborted")
    mean = LossReport(*(float(np.mean([getattr(r, k) for r in reports]))
                        for k in ("policy_loss", "value_loss", "entropy", "total", "clip_frac")))
    return new, opt, mean


def ppo_config_dict(cfg: PpoConfig) -> dict:
    return asdict(cfg)
