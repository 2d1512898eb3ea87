"""Final mean test accuracy (%) per method and attacker count, mean ± std over seeds.

    python3 scripts/robustness_table.py --attack sfa --seeds 5 --max-attackers 5
"""
import argparse
import csv
import sys

from lightyear.experiments import attacker_sweep
from lightyear.presets import separable_task
from lightyear.results import aligned_table, percent

METHODS = ("fedavg", "krum", "balance", "scclip", "lightyear")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--attack", default="sfa", choices=("sfa", "ana", "random_weights", "dynamic"))
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--max-attackers", type=int, default=5)
    ap.add_argument("--methods", nargs="+", default=list(METHODS), choices=METHODS)
    ap.add_argument("--csv", help="also write the table here")
    args = ap.parse_args()

    header = ["method", *[f"k={k}" for k in range(args.max_attackers + 1)]]
    rows = []
    for method in args.methods:
        per_k = [[] for _ in range(args.max_attackers + 1)]
        for seed in range(args.seeds):
            for cell in attacker_sweep(separable_task(seed, method, attack=args.attack), args.max_attackers):
                per_k[cell.key["k"]].append(cell.final_mean_accuracy)
        rows.append([method, *[percent(v) for v in per_k]])
        print(f"done {method}", file=sys.stderr)
    sys.stdout.write(aligned_table(header, rows))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows([header, *rows])


if __name__ == "__main__":
    main()
