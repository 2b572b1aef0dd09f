"""Markdown tables from sweep results and eval summaries.

    python scripts/table.py runs/sweep/results.csv
    python scripts/table.py --summary runs/eval/summary.csv
"""
import argparse
import csv
from collections import defaultdict

import numpy as np

from verti import evalbench as eb


def sweep_table(path):
    rows = list(csv.DictReader(open(path, newline="")))
    by = defaultdict(dict)
    for r in rows:
        by[r["sampler"]][int(r["seed"])] = r
    seeds = sorted({int(r["seed"]) for r in rows})
    cols = ["easy_success", "train_success", "test_success"]
    out = ["| sampler | " + " | ".join(f"{c} (mean)" for c in cols) + " | per-seed test |",
           "|---" * (len(cols) + 2) + "|"]
    for s, runs in by.items():
        means = [np.mean([float(runs[k][c]) for k in runs]) for c in cols]
        per = " ".join(f"{float(runs[k]['test_success']):.2f}" if k in runs else "-" for k in seeds)
        out.append(f"| {s.upper()} | " + " | ".join(f"{m:.2f}" for m in means) + f" | {per} |")
    if "vs" in by and "vr" in by:
        paired = [k for k in seeds if k in by["vs"] and k in by["vr"]]
        wins = sum(float(by["vs"][k]["test_success"]) >= float(by["vr"][k]["test_success"])
                   for k in paired)
        out.append(f"\nVS >= VR on test success in {wins}/{len(paired)} paired seeds")
    return "\n".join(out)


def _num(x):
    return x if x == "N/A" else f"{float(x):.2f}"


def summary_table(path):
    rows = eb.read_summary_csv(path)
    head = ["method", "success", "mean time (s)", "std time (s)", "roll mean/var", "pitch mean/var"]
    out = ["| " + " | ".join(head) + " |", "|---" * len(head) + "|"]
    for m, s, n, *vals in rows:
        t, sd, rm, rv, pm, pv = map(_num, vals)
        out.append(f"| {m} | {s}/{n} | {t} | {sd} | {rm}/{rv} | {pm}/{pv} |")
    return "\n".join(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("results", nargs="?")
    ap.add_argument("--summary")
    args = ap.parse_args()
    if not (args.results or args.summary):
        ap.error("give a results.csv and/or --summary")
    if args.results:
        print(sweep_table(args.results))
    if args.summary:
        print(summary_table(args.summary))


if __name__ == "__main__":
    main()
