"""``verti gen|train|eval|plot``.

Precedence for run settings: built-in defaults, then ``--config FILE``
(flat ``key = value``), then explicit flags. ``VERTI_OUT`` sets the
default output directory.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import evalbench as eb
from .config import load_config
from .errors import VertiError
from .learner import PolicyController
from .planners import NaivePlanner, OptimisticPlanner
from .plotting import curve_svg, summary_svg
from .training import (Trainer, generate_terrain, load_params, load_terrain_dir,
                       load_trainer, CheckpointError)

log = logging.getLogger("verti")

CHECKPOINT = "checkpoint.json"


def _default_out() -> str:
    return os.environ.get("VERTI_OUT", "runs")


def cmd_gen(args) -> int:
    cfg = load_config(args.config, {"seed": args.seed, "terrain_count": args.count,
                                    "roughness": args.roughness,
                                    "roughness_mult": args.roughness_mult,
                                    "test_count": args.test_count})
    out = Path(args.out or _default_out())
    written = generate_terrain(out, cfg.terrain_count, cfg.seed, cfg.roughness, cfg.test_count,
                               cfg.roughness_mult, train=not args.test, test=True)
    print(f"wrote {len(written)} maps to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config, {"seed": args.seed, "sampler": args.sampler, "steps": args.steps,
                                    "alpha": args.alpha, "beta": args.beta,
                                    "eval_every": args.eval_every, "out": args.out})
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    train_maps = load_terrain_dir(args.terrain, "terrain")
    test_maps = load_terrain_dir(args.terrain, "test")
    ckpt = out / CHECKPOINT
    if args.resume:
        trainer = load_trainer(ckpt, train_maps, test_maps, cfg)
        log.info("resumed at %d steps", trainer.env_steps)
    else:
        trainer = Trainer(cfg, train_maps, test_maps)
    trainer.run(cfg.steps, checkpoint_path=ckpt)
    trainer.write_artifacts(out)
    last = trainer.curve[-1].eval_success_rate if trainer.curve else float("nan")
    print(f"trained {trainer.env_steps} steps / {trainer.episodes} episodes; "
          f"last eval success {last:.2f}; artifacts in {out}")
    return 0


def _merge_summary(path: Path, row: list[str]) -> list[list[str]]:
    rows = eb.read_summary_csv(path) if path.exists() else []
    rows = [r for r in rows if r[0] != row[0]] + [row]
    eb.write_summary_csv(rows, path)
    return rows


def cmd_eval(args) -> int:
    cfg = load_config(args.config, {"seed": args.seed, "trials": args.trials})
    if args.planner:
        controller = OptimisticPlanner() if args.planner == "op" else NaivePlanner(cfg.naive_planner())
        method = args.method or args.planner.upper()
    else:
        if not args.checkpoint:
            raise VertiError("eval needs --checkpoint or --planner")
        controller = PolicyController(load_params(args.checkpoint), deterministic=True)
        method = args.method or Path(args.checkpoint).parent.name or "policy"
    maps = load_terrain_dir(args.terrain, args.maps)
    report = eb.run_trials(controller, maps, cfg.trials, cfg.episode(), cfg.seed, cfg.weights())
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    eb.write_report_csv(report, out / "report.csv")
    rows = _merge_summary(out / "summary.csv", eb.summary_row(method, report))
    print(eb.format_table(rows))
    return 0


def cmd_plot(args) -> int:
    # read and validate everything before writing anything
    series = {}
    for spec in args.curve or []:
        name, _, path = spec.rpartition("=")
        name = name or Path(path).parent.name or Path(path).stem
        series[name] = eb.read_curve_csv(path)
    rows = eb.read_summary_csv(args.summary) if args.summary else None
    if not series and rows is None:
        raise VertiError("plot needs --curve and/or --summary")
    docs = {}
    if series:
        docs["curve.svg"] = curve_svg(series, args.smooth)
    if rows is not None:
        docs["summary.svg"] = summary_svg(rows)
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    for name, text in docs.items():
        (out / name).write_text(text)
    print("wrote " + ", ".join(str(out / n) for n in docs))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="verti", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="write training and held-out test heightmaps")
    g.add_argument("--count", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.add_argument("--test", action="store_true", help="only write the held-out test maps")
    g.add_argument("--test-count", type=int)
    g.add_argument("--roughness", type=float)
    g.add_argument("--roughness-mult", type=float)
    g.add_argument("--config")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="PPO training with a terrain sampler")
    t.add_argument("--terrain", required=True, help="directory written by 'verti gen'")
    t.add_argument("--out")
    t.add_argument("--sampler", choices=("vs", "vr", "mc"))
    t.add_argument("--steps", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--alpha", type=float)
    t.add_argument("--beta", type=float)
    t.add_argument("--eval-every", type=int)
    t.add_argument("--resume", action="store_true")
    t.add_argument("--config")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="run trials and write report.csv / summary.csv")
    e.add_argument("--terrain", required=True)
    src = e.add_mutually_exclusive_group()
    src.add_argument("--checkpoint")
    src.add_argument("--planner", choices=("op", "np"))
    e.add_argument("--maps", choices=("test", "terrain"), default="test")
    e.add_argument("--method")
    e.add_argument("--trials", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--out")
    e.add_argument("--config")
    e.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="render curve.csv / summary.csv to SVG")
    p.add_argument("--curve", action="append", help="[NAME=]path/to/curve.csv; repeatable")
    p.add_argument("--summary")
    p.add_argument("--smooth", type=int, default=1, help="odd moving-average window")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (VertiError, CheckpointError, OSError, ValueError, KeyError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"verti: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
