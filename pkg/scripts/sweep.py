"""Train each sampler on the small curriculum for several seeds.

Writes one curve.csv per run plus results.csv with the deterministic
success rates used by the learning-sanity and ordering checks:

    python scripts/sweep.py --samplers vs vr mc --seeds 1 2 3 --out runs/sweep
"""
import argparse
import csv
import logging
import time
from pathlib import Path

from verti import evalbench as eb
from verti.config import RunConfig
from verti.learner import PolicyController
from verti.training import Trainer, make_test_maps, make_training_set

FIELDS = ["sampler", "seed", "steps", "episodes", "easy_success", "train_success",
          "test_success", "seconds"]


def one_run(sampler, seed, args):
    cfg = RunConfig(seed=seed, terrain_count=args.count, sampler=sampler, steps=args.steps,
                    eval_every=args.eval_every)
    train = list(make_training_set(seed, cfg.terrain_count, cfg.roughness))
    test = make_test_maps(seed, cfg.test_count, cfg.roughness, cfg.roughness_mult)
    t0 = time.perf_counter()
    tr = Trainer(cfg, train, test).run()
    policy = PolicyController(tr.params, deterministic=True)
    ep, w = cfg.episode(), cfg.weights()
    easy = eb.run_trials(policy, train[:3], 30, ep, seed, w)
    full = eb.run_trials(policy, train, 10 * len(train), ep, seed, w)
    final = eb.run_trials(policy, test, cfg.trials, ep, seed, w)
    run_dir = args.out / f"{sampler}_s{seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    tr.write_artifacts(run_dir)
    return dict(sampler=sampler, seed=seed, steps=tr.env_steps, episodes=tr.episodes,
                easy_success=easy.success_rate, train_success=full.success_rate,
                test_success=final.success_rate, seconds=round(time.perf_counter() - t0, 1))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samplers", nargs="+", default=["vs", "vr"], choices=["vs", "vr", "mc"])
    ap.add_argument("--seeds", nargs="+", type=int, default=[1, 2, 3])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--eval-every", type=int, default=20_000)
    ap.add_argument("--out", type=Path, default=Path("runs/sweep"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "results.csv"
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, FIELDS)
        w.writeheader()
        for seed in args.seeds:
            for sampler in args.samplers:
                row = one_run(sampler, seed, args)
                logging.info("%s", row)
                w.writerow(row)
                f.flush()
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
