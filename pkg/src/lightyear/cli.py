"""Command-line front end.

    lightyear run    --config exp.toml --out results/a
    lightyear sweep  --config exp.toml --axis attackers|sensitivity|gamma --out results/b
    lightyear report results/

``LIGHTYEAR_SEED`` overrides the config's seed. Exit status: 0 ok, 2 bad
config, 3 anything failing at run time.
"""
from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import results
from .config import config_to_dict, parse_config, run_id
from .experiments import attacker_sweep, gamma_cells, sensitivity_cells
from .sim import ConfigError, ExperimentConfig, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
SEED_ENV = "LIGHTYEAR_SEED"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def load(path, workers: int | None = None) -> ExperimentConfig:
    cfg = parse_config(path)
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            cfg = replace(cfg, master_seed=int(env, 10))
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None
    if workers is not None:
        cfg = replace(cfg, workers=workers)
    cfg.validate()
    return cfg


class _Outputs:
    """Tracks files written into an output dir so a failed command can remove them."""

    def __init__(self, out: Path):
        self.out = out
        self.created_dir = not out.exists()
        self.written: list[Path] = []

    def __enter__(self):
        self.out.mkdir(parents=True, exist_ok=True)
        return self

    def write(self, name: str, text: str) -> None:
        path = self.out / name
        results.atomic_write(path, text)
        self.written.append(path)

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            for p in self.written:
                p.unlink(missing_ok=True)
            if self.created_dir:
                shutil.rmtree(self.out, ignore_errors=True)
        return False


def cmd_run(args) -> int:
    cfg = load(args.config, args.workers)
    rid = run_id(cfg)
    started = _now()
    logs = run_experiment(cfg)
    final = logs[-1]
    summary = {
        "run_id": rid,
        "config_path": str(args.config),
        "output_dir": str(args.out),
        "started": started,
        "finished": _now(),
        "config": config_to_dict(cfg),
        "final_mean_test_accuracy": final.mean_test_accuracy,
        "final_mean_val_accuracy": final.mean_val_accuracy,
        "final_test_accuracy": {str(c.client_id): c.test_accuracy for c in final.clients},
    }
    with _Outputs(Path(args.out)) as out:
        out.write("rounds.csv", results.csv_text(results.ROUND_COLUMNS, results.round_rows(logs, cfg, rid)))
        out.write("summary.json", json.dumps(summary, indent=2) + "\n")
    print(f"{rid}: final mean test accuracy {final.mean_test_accuracy:.4f} -> {args.out}")
    return EXIT_OK


def _sweep_cells(cfg: ExperimentConfig, axis: str):
    sw = cfg.sweep
    if axis == "attackers":
        return attacker_sweep(cfg, sw.max_attackers, include_zero=False)
    if axis == "sensitivity":
        return sensitivity_cells(cfg, sw.s_values, sw.attacker_counts)
    return gamma_cells(cfg, sw.gamma_values)


def cmd_sweep(args) -> int:
    cfg = load(args.config, args.workers)
    if args.axis == "attackers" and not 1 <= cfg.sweep.max_attackers < cfg.n_clients:
        raise ConfigError("sweep.max_attackers must satisfy 1 <= max_attackers < n_clients")
    cells = _sweep_cells(cfg, args.axis)
    key_names = list(cells[0].key)
    header = [f"cell_{k}" for k in key_names] + list(results.ROUND_COLUMNS)
    rows = []
    for cell in cells:
        prefix = [results.fmt(cell.key[k]) for k in key_names]
        rows.extend(prefix + r for r in results.round_rows(cell.logs, cell.cfg, run_id(cell.cfg)))
    with _Outputs(Path(args.out)) as out:
        out.write(f"sweep_{args.axis}.csv", results.csv_text(header, rows))
    print(f"{len(cells)} cells -> {Path(args.out) / f'sweep_{args.axis}.csv'}")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = results.report_rows(results.load_summaries(args.results_dir))
    text = results.aligned_table(results.REPORT_COLUMNS, rows)
    root = Path(args.results_dir)
    results.atomic_write(root / "report.csv", results.csv_text(results.REPORT_COLUMNS, rows))
    results.atomic_write(root / "report.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lightyear", description="Peer-to-peer federated learning experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", required=True, type=Path)
    run.add_argument("--workers", type=int, default=None, help="override the config's thread count")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="run a grid of experiments along one axis")
    sweep.add_argument("--config", required=True, type=Path)
    sweep.add_argument("--axis", required=True, choices=("attackers", "sensitivity", "gamma"))
    sweep.add_argument("--out", required=True, type=Path)
    sweep.add_argument("--workers", type=int, default=None)
    sweep.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="tabulate mean ± std accuracy over finished runs")
    rep.add_argument("results_dir", type=Path)
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - every other failure maps to the runtime exit code
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
