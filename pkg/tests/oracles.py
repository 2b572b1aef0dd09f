"""Independent reference implementations used by the tests.

Nothing here calls into the code under test except to read parameters by
name, so agreement is evidence rather than tautology.
"""
from __future__ import annotations

import math

import numpy as np

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


# ------------------------------------------------------------------ GAE

def gae_double_sum(rewards, values, gamma, lam):
    """Advantages by the explicit double sum, with a zero bootstrap after the last step."""
    T = len(rewards)
    v_next = [values[t + 1] if t + 1 < T else 0.0 for t in range(T)]
    delta = [rewards[t] + gamma * v_next[t] - values[t] for t in range(T)]
    return np.array([sum((gamma * lam) ** (k - t) * delta[k] for k in range(t, T))
                     for t in range(T)])


# ------------------------------------------------------------------ sampler

def enumerated_vs(u, v, n, seen, alpha, beta):
    """Mixture distribution built from plain Python sorting."""
    ids = [i for i in range(len(u)) if seen[i]]
    order = sorted(ids, key=lambda i: (-u[i], i))
    rank = {i: k + 1 for k, i in enumerate(order)}
    wu = [rank[i] ** (-beta) if seen[i] else 0.0 for i in range(len(u))]
    qu = [w / sum(wu) for w in wu]
    wv = [n - x for x in v]
    qv = [w / sum(wv) for w in wv] if sum(wv) > 0 else [1.0 / len(v)] * len(v)
    return np.array([(1 - alpha) * a + alpha * b for a, b in zip(qu, qv)])


# ------------------------------------------------------------------ network

def _relu(z):
    return np.maximum(z, 0.0)


def single_loss(mean, log_std, value, action, old_lp, adv, ret, clip, vf_coef, ent_coef):
    """PPO loss for one transition written from the textbook formulas."""
    s = np.exp(log_std)
    lp = np.sum(-0.5 * ((action - mean) / s) ** 2 - log_std - HALF_LOG_2PI, axis=-1)
    ratio = np.exp(lp - old_lp)
    surr = np.minimum(ratio * adv, np.clip(ratio, 1 - clip, 1 + clip) * adv)
    entropy = np.sum(log_std + 0.5 + HALF_LOG_2PI, axis=-1)
    return -surr + vf_coef * (value - ret) ** 2 - ent_coef * entropy


class KinkError(ValueError):
    """The stencil straddles a ReLU kink or a clip boundary."""


def _relu_delta(z0, dz):
    # perturbation of relu(z0 + dz) - relu(z0), valid only if no sign flips
    if np.any(np.abs(dz) >= np.abs(z0)):
        raise KinkError("pre-activation within the stencil of zero")
    return dz * (z0 > 0)


def _tanh_delta(z0, dz):
    # tanh(a + b) - tanh(a) without cancellation
    t0, tb = np.tanh(z0), np.tanh(dz)
    return tb * (1.0 - t0 ** 2) / (1.0 + t0 * tb)


class FdOracle:
    """Central finite differences for every parameter of the actor-critic.

    A single-transition perturbation of weight ``W[i, j]`` in a dense layer
    moves that layer's pre-activation by ``h * a_in[i]`` in column ``j``.
    All such perturbations of one layer are stacked into a batch and pushed
    through the rest of the network together.

    Rather than subtracting two O(1) losses, each perturbed activation is
    carried as base + delta and the loss change is formed from the deltas
    directly. The result is still (L(p + h) - L(p - h)) / 2h, just without
    the round-off that swamps small gradient entries at h = 1e-5.
    """

    def __init__(self, params, layout, trunk, actor, critic):
        self.p = params
        self.layout = layout
        self.nt, self.na, self.nc = len(trunk) - 1, len(actor) - 1, len(critic) - 1

    def get(self, name):
        return self.p[name]

    def _base(self, x):
        get = self.get
        pre = {}
        a = np.asarray(x, dtype=np.float64)[None, :]
        acts = [a]
        for k in range(self.nt):
            pre["trunk", k] = acts[-1] @ get(f"trunk{k}.W") + get(f"trunk{k}.b")
            acts.append(_relu(pre["trunk", k]))
        for prefix, n in (("actor", self.na), ("critic", self.nc)):
            a = acts[-1]
            for k in range(n):
                pre[prefix, k] = a @ get(f"{prefix}{k}.W") + get(f"{prefix}{k}.b")
                a = _relu(pre[prefix, k])
        return acts, pre

    def grad(self, x, action, old_lp, adv, ret, clip, vf_coef, ent_coef, h):
        get = self.get
        acts, pre = self._base(x)
        log_std = np.asarray(get("log_std"), dtype=np.float64)
        s2 = np.exp(2 * log_std)
        mean0 = np.tanh(pre["actor", self.na - 1])[0]
        v0 = pre["critic", self.nc - 1][0, 0]
        lp0 = np.sum(-0.5 * (action - mean0) ** 2 / s2 - log_std - HALF_LOG_2PI)
        r0 = math.exp(lp0 - old_lp)

        def region(r):
            return np.where(r > 1 + clip, 1, np.where(r < 1 - clip, -1, 0))
        # the surrogate follows r * adv unless the clipped branch is the min
        live = not ((region(r0) > 0 and adv > 0) or (region(r0) < 0 and adv < 0))

        def head(prefix, n, k, dz):
            for m in range(k, n):
                if m > k:
                    dz = d @ get(f"{prefix}{m}.W")
                if m < n - 1:
                    d = _relu_delta(pre[prefix, m], dz)
            return dz

        def loss_delta(dmean, dv):
            dlp = np.sum(dmean * (2 * (action - mean0) - dmean) / (2 * s2), axis=-1)
            r = r0 * np.exp(dlp)
            if np.any(region(r) != region(r0)):
                raise KinkError("ratio crosses a clip boundary")
            dsurr = adv * r0 * np.expm1(dlp) if live else 0.0
            return -dsurr + vf_coef * dv * (2 * (v0 - ret) + dv)

        def from_feat(dfeat):
            dm = _tanh_delta(pre["actor", self.na - 1], head("actor", self.na, 0, dfeat @ get("actor0.W")))
            dv = head("critic", self.nc, 0, dfeat @ get("critic0.W"))[:, 0]
            return loss_delta(dm, dv)

        def trunk_tail(k, dz):
            d = _relu_delta(pre["trunk", k], dz)
            for m in range(k + 1, self.nt):
                d = _relu_delta(pre["trunk", m], d @ get(f"trunk{m}.W"))
            return from_feat(d)

        def head_tail(prefix, n):
            def tail(k, dz):
                out = head(prefix, n, k, dz)
                if prefix == "actor":
                    return loss_delta(_tanh_delta(pre["actor", n - 1], out), np.zeros(len(dz)))
                return loss_delta(np.zeros((len(dz), 2)), out[:, 0])
            return tail

        out = {}

        def perturbed(prefix, k, a_in, tail):
            n_in, n_out = get(f"{prefix}{k}.W").shape
            # rows: weights (i, j) in C order, then biases j
            shift = np.concatenate([np.repeat(a_in[0], n_out), np.ones(n_out)])
            col = np.concatenate([np.tile(np.arange(n_out), n_in), np.arange(n_out)])
            res = []
            for sgn in (1.0, -1.0):
                dz = np.zeros((len(col), n_out))
                dz[np.arange(len(col)), col] = sgn * h * shift
                res.append(tail(k, dz))
            g = (res[0] - res[1]) / (2 * h)
            out[f"{prefix}{k}.W"] = g[:n_in * n_out].reshape(n_in, n_out)
            out[f"{prefix}{k}.b"] = g[n_in * n_out:]

        for k in range(self.nt):
            perturbed("trunk", k, acts[k], trunk_tail)
        for prefix, n in (("actor", self.na), ("critic", self.nc)):
            a_in = acts[-1]
            for k in range(n):
                perturbed(prefix, k, a_in, head_tail(prefix, n))
                a_in = _relu(pre[prefix, k])

        def loss(ls):
            return single_loss(mean0, ls, v0, action, old_lp, adv, ret, clip, vf_coef, ent_coef)
        g = np.zeros(2)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            g[j] = (loss(log_std + e) - loss(log_std - e)) / (2 * h)
        out["log_std"] = g
        flat = np.zeros(sum(int(np.prod(s)) for _, s in self.layout.values()))
        for name, (off, shape) in self.layout.items():
            flat[off:off + int(np.prod(shape))] = np.asarray(out[name]).ravel()
        return flat


def max_relative_error(analytic, numeric, floor=1e-6):
    """max |a - n| / max(|a|, |n|, floor); the floor keeps round-off on
    genuinely zero gradients (dead ReLUs) from dominating."""
    a, n = np.asarray(analytic), np.asarray(numeric)
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)))


# ------------------------------------------------------------------ planners

def goal_wall_heights(rows=128, cols=64, width=1.3, length=3.1, height=0.5,
                      x_span=(0.55, 0.75), y_span=(0.6, 0.95)):
    """Flat ground with one block straddling the straight start-to-goal line."""
    x = np.linspace(0.0, width, cols)
    y = np.linspace(0.0, length, rows)
    inside = ((x[None, :] >= x_span[0]) & (x[None, :] <= x_span[1])
              & (y[:, None] >= y_span[0]) & (y[:, None] <= y_span[1]))
    return np.where(inside, height, 0.0)


def bilinear(h, width, length, px, py):
    rows, cols = h.shape
    out = []
    for x, y in zip(px, py):
        fx = min(max(x / (width / (cols - 1)), 0.0), cols - 1.0)
        fy = min(max(y / (length / (rows - 1)), 0.0), rows - 1.0)
        c0, r0 = min(int(fx), cols - 2), min(int(fy), rows - 2)
        tx, ty = fx - c0, fy - r0
        out.append((1 - ty) * ((1 - tx) * h[r0, c0] + tx * h[r0, c0 + 1])
                   + ty * ((1 - tx) * h[r0 + 1, c0] + tx * h[r0 + 1, c0 + 1]))
    return np.array(out)


def sector_costs(h, width, length, x, y, bearing, offsets_deg=(-60, -40, -20, 0, 20, 40, 60),
                 length_m=0.6, halfwidth=0.15, w_mean=1.0, w_var=2.0, n_along=12, n_across=5):
    """Cost of each candidate strip, sampled point by point."""
    ground = bilinear(h, width, length, [x], [y])[0]
    costs = []
    for off in offsets_deg:
        d = bearing + math.radians(off)
        px, py = [], []
        for i in range(1, n_along + 1):
            s = length_m * i / n_along
            for j in range(n_across):
                l = -halfwidth + 2 * halfwidth * j / (n_across - 1)
                px.append(x + s * math.cos(d) - l * math.sin(d))
                py.append(y + s * math.sin(d) + l * math.cos(d))
        rel = bilinear(h, width, length, px, py) - ground
        costs.append(w_mean * np.mean(np.abs(rel)) + w_var * np.var(rel))
    return np.array(costs)
