"""Decay ablation on the two-group feature-shift task.

For each seed, compares the late-round (rounds 8-12) spread of client validation
accuracy between gamma = 1 and gamma = 0.95 with every peer accepted.

    python3 scripts/gamma_ablation.py --seeds 10
"""
import argparse

import numpy as np

from lightyear.experiments import gamma_cells
from lightyear.presets import feature_shift_task


def late_spread(logs):
    return float(np.mean([np.std([c.val_accuracy for c in log.clients]) for log in logs[7:12]]))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--first-seed", type=int, default=0)
    ap.add_argument("--gammas", type=float, nargs=2, default=[1.0, 0.95])
    args = ap.parse_args()

    g_a, g_b = args.gammas
    print(f"{'seed':>4}  {'spread g=' + str(g_a):>14}  {'spread g=' + str(g_b):>15}  {'mean acc g=' + str(g_a):>16}  {'mean acc g=' + str(g_b):>17}")
    wins = 0
    for seed in range(args.first_seed, args.first_seed + args.seeds):
        a, b = gamma_cells(feature_shift_task(seed), (g_a, g_b))
        sa, sb = late_spread(a.logs), late_spread(b.logs)
        wins += sb <= sa
        print(f"{seed:>4}  {sa:>14.4f}  {sb:>15.4f}  {a.logs[-1].mean_val_accuracy:>16.3f}  {b.logs[-1].mean_val_accuracy:>17.3f}")
    print(f"gamma={g_b} spread <= gamma={g_a} spread in {wins}/{args.seeds} seeds")


if __name__ == "__main__":
    main()
