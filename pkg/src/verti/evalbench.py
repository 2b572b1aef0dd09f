"""Trial runner, Table-II-style metrics and training-curve bookkeeping."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import reward as rw
from .elevation import ElevationMap
from .simworld import EpisodeConfig, run_episode


@dataclass
class TrialRecord:
    trial: int
    map_id: int | None
    success: bool
    time_s: float | None
    mean_roll_deg: float
    mean_pitch_deg: float
    steps: int


@dataclass
class TrialReport:
    trials: int
    successes: int
    mean_time_s: float | None
    std_time_s: float | None
    roll_mean_deg: float
    roll_var_deg: float
    pitch_mean_deg: float
    pitch_var_deg: float
    records: list[TrialRecord] = field(default_factory=list)

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def run_trials(controller, test_maps: Sequence[ElevationMap], trials: int, cfg: EpisodeConfig,
               seed: int, weights: rw.RewardWeights = rw.DEFAULT_WEIGHTS) -> TrialReport:
    """Round-robin ``trials`` episodes over ``test_maps``.

    Each trial draws from its own generator keyed on ``(seed, trial)``, so
    results do not depend on execution order.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if not test_maps:
        raise ValueError("need at least one test map")
    records, rolls, pitches = [], [], []
    for k in range(trials):
        emap = test_maps[k % len(test_maps)]
        traj = run_episode(emap, controller, cfg, trial_rng(seed, k), weights)
        r = np.degrees(np.abs(traj.roll))
        p = np.degrees(np.abs(traj.pitch))
        rolls.append(r)
        pitches.append(p)
        records.append(TrialRecord(k, emap.id, traj.success,
                                   traj.duration if traj.success else None,
                                   float(r.mean()), float(p.mean()), len(traj)))
    times = [rec.time_s for rec in records if rec.success]
    all_r = np.concatenate(rolls)
    all_p = np.concatenate(pitches)
    return TrialReport(
        trials=trials,
        successes=len(times),
        mean_time_s=float(np.mean(times)) if times else None,
        std_time_s=float(np.std(times)) if times else None,
        roll_mean_deg=float(all_r.mean()), roll_var_deg=float(all_r.var()),
        pitch_mean_deg=float(all_p.mean()), pitch_var_deg=float(all_p.var()),
        records=records,
    )


# ------------------------------------------------------------------ curves

@dataclass
class TrainingCurvePoint:
    env_steps: int
    eval_success_rate: float
    wall_time_s: float = 0.0


EVAL_TRIALS = 20


def periodic_eval(params, test_maps, env_steps: int, curve: list, cfg: EpisodeConfig,
                  seed: int, trials: int = EVAL_TRIALS,
                  weights: rw.RewardWeights = rw.DEFAULT_WEIGHTS, wall_time_s: float = 0.0):
    """Deterministic-action evaluation; appends one point to ``curve``.

    Uses its own generators (keyed on ``seed`` and ``env_steps``) and never
    touches learner or curriculum state.
    """
    from .learner import PolicyController

    report = run_trials(PolicyController(params, deterministic=True), test_maps, trials, cfg,
                        seed=hash_seed(seed, env_steps), weights=weights)
    point = TrainingCurvePoint(env_steps, report.success_rate, wall_time_s)
    curve.append(point)
    return point


def hash_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def smooth_curve(values, window: int) -> np.ndarray:
    """Centred moving average; the window shrinks at the ends."""
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and >= 1")
    x = np.asarray(values, dtype=np.float64)
    half = window // 2
    out = np.empty_like(x)
    for i in range(len(x)):
        lo, hi = max(0, i - half), min(len(x), i + half + 1)
        out[i] = x[lo:hi].mean()
    return out


# ------------------------------------------------------------------ CSV output

def _fmt(v) -> str:
    if v is None:
        return "N/A"
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_report_csv(report: TrialReport, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["trial", "map_id", "success", "time_s", "mean_roll_deg", "mean_pitch_deg"])
        for r in report.records:
            w.writerow([_fmt(r.trial), _fmt(r.map_id), _fmt(r.success), _fmt(r.time_s),
                        _fmt(r.mean_roll_deg), _fmt(r.mean_pitch_deg)])


SUMMARY_HEADER = ["method", "successes", "trials", "time_mean_s", "time_std_s",
                  "roll_mean_deg", "roll_var_deg", "pitch_mean_deg", "pitch_var_deg"]


def summary_row(method: str, report: TrialReport) -> list[str]:
    return [method, _fmt(report.successes), _fmt(report.trials), _fmt(report.mean_time_s),
            _fmt(report.std_time_s), _fmt(report.roll_mean_deg), _fmt(report.roll_var_deg),
            _fmt(report.pitch_mean_deg), _fmt(report.pitch_var_deg)]


def write_summary_csv(rows: list[list[str]], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerows(rows)


def format_table(rows: list[list[str]]) -> str:
    """Human-readable Success / Time / Angles table."""
    lines = [f"{'Method':<8}{'Success':>10}{'Time':>16}   Angles (Roll/Pitch)"]
    for r in rows:
        method, succ, trials, tm, ts, rm, rv, pm, pv = r
        time = "N/A" if tm == "N/A" else f"{float(tm):.2f}±{float(ts):.2f}"
        angles = f"{float(rm):.2f}±{float(rv):.2f} / {float(pm):.2f}±{float(pv):.2f}"
        lines.append(f"{method:<8}{succ + '/' + trials:>10}{time:>16}   {angles}")
    return "\n".join(lines)


def write_curve_csv(curve: list[TrainingCurvePoint], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["env_steps", "success_rate"])
        for p in curve:
            w.writerow([p.env_steps, repr(float(p.eval_success_rate))])


class CsvFormatError(ValueError):
    def __init__(self, msg: str, row: int):
        self.row = row
        super().__init__(f"row {row}: {msg}")


def read_curve_csv(path) -> list[TrainingCurvePoint]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise CsvFormatError("empty file", 1)
    if rows[0] != ["env_steps", "success_rate"]:
        raise CsvFormatError("expected header 'env_steps,success_rate'", 1)
    pts = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise CsvFormatError(f"expected 2 fields, got {len(row)}", i)
        try:
            steps, rate = int(row[0]), float(row[1])
        except ValueError as exc:
            raise CsvFormatError(str(exc), i) from None
        if not math.isfinite(rate):
            raise CsvFormatError("non-finite success rate", i)
        pts.append(TrainingCurvePoint(steps, rate))
    if not pts:
        raise CsvFormatError("no data rows", 2)
    return pts


def read_summary_csv(path) -> list[list[str]]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != SUMMARY_HEADER:
        raise CsvFormatError("expected summary header " + ",".join(SUMMARY_HEADER), 1)
    body = rows[1:]
    if not body:
        raise CsvFormatError("no data rows", 2)
    for i, row in enumerate(body, start=2):
        if len(row) != len(SUMMARY_HEADER):
            raise CsvFormatError(f"expected {len(SUMMARY_HEADER)} fields, got {len(row)}", i)
        try:
            int(row[1]), int(row[2])
            for v in row[3:]:
                if v != "N/A":
                    float(v)
        except ValueError as exc:
            raise CsvFormatError(str(exc), i) from None
    return body

