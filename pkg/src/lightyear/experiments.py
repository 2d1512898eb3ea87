"""Sweeps and probes built on top of :func:`lightyear.sim.run_experiment`."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .data import LabeledDataset
from .metrics import accuracy
from .nn import ParamVector
from .sim import ConfigError, ExperimentConfig, RoundLog, attacker_ids, attacker_order, run_experiment


@dataclass(frozen=True)
class SweepCell:
    key: dict
    cfg: ExperimentConfig
    logs: list[RoundLog]

    @property
    def attackers(self) -> tuple[int, ...]:
        return tuple(attacker_ids(self.cfg))

    @property
    def final_mean_accuracy(self) -> float:
        return self.logs[-1].mean_test_accuracy


def with_attackers(cfg: ExperimentConfig, k: int) -> ExperimentConfig:
    ids = tuple(sorted(attacker_order(cfg.master_seed, cfg.n_clients)[:k]))
    return replace(cfg, n_malfunctioning=k, attacker_ids=ids)


def attacker_sweep(base_cfg: ExperimentConfig, max_attackers: int, include_zero: bool = True) -> list[SweepCell]:
    """One run per attacker count; the k-attacker set always contains the (k-1)-set."""
    if not 0 <= max_attackers < base_cfg.n_clients:
        raise ConfigError("max_attackers must be < n_clients")
    cells = []
    for k in range(0 if include_zero else 1, max_attackers + 1):
        cfg = with_attackers(base_cfg, k)
        cells.append(SweepCell({"k": k}, cfg, run_experiment(cfg)))
    return cells


def sensitivity_cells(base_cfg: ExperimentConfig, s_values: Sequence[float], attacker_counts: Sequence[int]) -> list[SweepCell]:
    cells = []
    for s in s_values:
        attack = replace(base_cfg.attack, kind="ana", ana_form="scaled", ana_scaling_s=float(s))
        for k in attacker_counts:
            cfg = with_attackers(replace(base_cfg, attack=attack), k)
            cells.append(SweepCell({"s": float(s), "k": k}, cfg, run_experiment(cfg)))
    return cells


def sensitivity_sweep(base_cfg: ExperimentConfig, s_values: Sequence[float], attacker_counts: Sequence[int]) -> list[dict]:
    """Scaled-ANA grid over (s, k); one row per round per cell with mean accuracies."""
    rows = []
    for cell in sensitivity_cells(base_cfg, s_values, attacker_counts):
        for log in cell.logs:
            rows.append({
                **cell.key,
                "round": log.round,
                "mean_val_acc": log.mean_val_accuracy,
                "mean_test_acc": log.mean_test_accuracy,
            })
    return rows


def gamma_cells(base_cfg: ExperimentConfig, gamma_values: Sequence[float]) -> list[SweepCell]:
    # accept-all selection isolates the effect of the round decay
    agreement = replace(base_cfg.agreement, tau=-1.0)
    cells = []
    for g in gamma_values:
        cfg = replace(base_cfg, method="lightyear", agreement=agreement,
                      lightyear=replace(base_cfg.lightyear, gamma=float(g)))
        cells.append(SweepCell({"gamma": float(g)}, cfg, run_experiment(cfg)))
    return cells


def gamma_ablation(base_cfg: ExperimentConfig, gamma_values: Sequence[float]) -> dict[float, list[float]]:
    """Per-round mean validation accuracy, one series per gamma."""
    return {c.key["gamma"]: [log.mean_val_accuracy for log in c.logs] for c in gamma_cells(base_cfg, gamma_values)}


def error_decomposition_probe(h_clean: ParamVector, h_corrupt: ParamVector, source: LabeledDataset, target: LabeledDataset) -> dict[str, float]:
    """Empirical split of a corrupted model's target error into shift and corruption parts.

    ``eps_M_est`` is the extra target error caused by corruption alone; it can be
    slightly negative from sampling noise.
    """
    if source.n == 0 or target.n == 0:
        raise ValueError("error decomposition needs nonempty source and target sets")
    eps_s = 1.0 - accuracy(h_clean, source)
    eps_t_clean = 1.0 - accuracy(h_clean, target)
    eps_t_corrupt = 1.0 - accuracy(h_corrupt, target)
    return {
        "eps_S": eps_s,
        "eps_T_clean": eps_t_clean,
        "eps_T_corrupt": eps_t_corrupt,
        "eps_M_est": eps_t_corrupt - eps_t_clean,
    }

