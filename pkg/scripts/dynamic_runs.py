"""Per-round attack schedule and accuracy under dynamic malfunctions.

    python3 scripts/dynamic_runs.py --seeds 10 --attackers 3
"""
import argparse

import numpy as np

from lightyear.presets import separable_task
from lightyear.sim import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--attackers", type=int, default=3)
    ap.add_argument("--method", default="lightyear")
    args = ap.parse_args()

    gaps = []
    for seed in range(args.seeds):
        clean = run_experiment(separable_task(seed, args.method))[-1].mean_test_accuracy
        logs = run_experiment(separable_task(seed, args.method, attack="dynamic", n_malfunctioning=args.attackers))
        schedule = {c.client_id: [] for c in logs[0].clients if c.attack_kind != "none"}
        for log in logs:
            for c in log.clients:
                if c.client_id in schedule:
                    schedule[c.client_id].append(c.attack_kind[0].upper())
        hit = logs[-1].mean_test_accuracy
        gaps.append(hit - clean)
        plan = "  ".join(f"{i}:{''.join(s)}" for i, s in schedule.items())
        print(f"seed {seed}: clean {clean:.3f}  attacked {hit:.3f}  schedule {plan}")
    print(f"mean change {np.mean(gaps):+.4f}, worst {min(gaps):+.4f} (A=ana S=sfa R=random weights)")


if __name__ == "__main__":
    main()
