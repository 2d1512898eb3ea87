"""Serialising run logs to CSV/JSON and aggregating finished runs into tables."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from collections import defaultdict
from pathlib import Path

import numpy as np

from .sim import ExperimentConfig, RoundLog

ROUND_COLUMNS = (
    "run_id", "round", "client_id", "method", "attack_kind", "n_malfunctioning",
    "test_acc", "val_acc", "ece", "selected_set", "composite_scores",
)
REPORT_COLUMNS = ("method", "attack", "n_malfunctioning", "n_runs", "accuracy")


class ReportError(RuntimeError):
    pass


def fmt(x: float) -> str:
    return f"{x:.6g}"


def round_rows(logs: list[RoundLog], cfg: ExperimentConfig, run_id: str) -> list[list[str]]:
    rows = []
    for log in logs:
        for c in log.clients:
            rows.append([
                run_id, str(log.round), str(c.client_id), cfg.method, c.attack_kind, str(cfg.n_malfunctioning),
                fmt(c.test_accuracy), fmt(c.val_accuracy), fmt(c.ece),
                ";".join(str(j) for j in sorted(c.selected_set)),
                ";".join(f"{j}={fmt(v)}" for j, v in sorted(c.composite_scores.items())),
            ])
    return rows


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def atomic_write(path: Path, text: str) -> None:
    """Write via a temp file in the same directory so readers never see a half-written file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def percent(values) -> str:
    v = 100.0 * np.asarray(values, dtype=np.float64)
    return f"{v.mean():.1f} ± {v.std():.1f}"


def load_summaries(results_dir) -> list[dict]:
    root = Path(results_dir)
    if not root.is_dir():
        raise ReportError(f"{root}: not a directory")
    paths = sorted(root.rglob("summary.json"))
    if not paths:
        raise ReportError(f"{root}: no runs found")
    out, bad = [], []
    for p in paths:
        try:
            s = json.loads(p.read_text(encoding="utf-8"))
            s["config"]["method"], s["config"]["attack"]["kind"], s["config"]["n_malfunctioning"]
            float(s["final_mean_test_accuracy"])
        except (OSError, ValueError, KeyError, TypeError) as exc:
            bad.append(f"{p}: {type(exc).__name__}: {exc}")
            continue
        out.append(s)
    if bad:
        raise ReportError("corrupt run outputs:\n  " + "\n  ".join(bad))
    return out


def report_rows(summaries: list[dict]) -> list[list[str]]:
    """method x attack x attacker count -> 'mean ± std' of final mean test accuracy (%)."""
    groups = defaultdict(list)
    for s in summaries:
        c = s["config"]
        kind = c["attack"]["kind"] if c["n_malfunctioning"] else "none"
        groups[(c["method"], kind, int(c["n_malfunctioning"]))].append(float(s["final_mean_test_accuracy"]))
    return [[m, a, str(k), str(len(v)), percent(v)] for (m, a, k), v in sorted(groups.items())]


def aligned_table(header, rows) -> str:
    table = [list(header), *rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in table) + "\n"
