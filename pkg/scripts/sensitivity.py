"""Scaled-noise sensitivity: per-round mean accuracy for each (s, k) cell, as CSV on stdout.

    python3 scripts/sensitivity.py --method fedavg --s 0 50 120.5 300 --k 1 3
"""
import argparse
import csv
import sys

from lightyear.experiments import sensitivity_sweep
from lightyear.presets import separable_task


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--method", default="fedavg")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--s", type=float, nargs="+", default=[0.0, 50.0, 120.5, 300.0])
    ap.add_argument("--k", type=int, nargs="+", default=[1, 3])
    args = ap.parse_args()

    rows = sensitivity_sweep(separable_task(args.seed, args.method, attack="ana"), args.s, args.k)
    w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: f"{v:.6g}" if isinstance(v, float) else v for k, v in r.items()})


if __name__ == "__main__":
    main()
