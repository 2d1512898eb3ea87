"""Aggregation rules over flat parameter arrays.

All functions take and return 1-D float arrays; callers holding
:class:`~lightyear.nn.ParamVector` objects pass ``.values``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class LightyearConfig:
    gamma: float = 0.95
    round_index_base: int = 0

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma ∈ (0,1] violated: gamma={self.gamma}")


@dataclass(frozen=True)
class BaselineConfig:
    krum_f: int | None = None  # None: use the experiment's attacker count
    balance_gamma: float = 0.3
    balance_kappa: float = 1.0
    scclip_radius: float | None = None  # None: per-client median distance in round 1

    def __post_init__(self):
        if self.krum_f is not None and self.krum_f < 0:
            raise ValueError("krum_f must be >= 0")
        if not self.balance_gamma > 0:
            raise ValueError("balance_gamma must be > 0")
        if self.balance_kappa < 0:
            raise ValueError("balance_kappa must be >= 0")
        if self.scclip_radius is not None and not self.scclip_radius > 0:
            raise ValueError("scclip_radius must be > 0")


def _stack(updates: Sequence[np.ndarray], like: np.ndarray | None = None) -> np.ndarray:
    arrs = [np.asarray(u, dtype=np.float64) for u in updates]
    shape = arrs[0].shape if like is None else np.shape(like)
    for a in arrs:
        if a.shape != shape:
            raise ValueError(f"parameter shape mismatch: {a.shape} vs {shape}")
    return np.stack(arrs)


def fedavg(updates: Sequence[np.ndarray]) -> np.ndarray:
    if len(updates) == 0:
        raise ValueError("fedavg of an empty update list")
    return _stack(updates).mean(axis=0)


def lightyear_aggregate(own: np.ndarray, selected: Sequence[np.ndarray], round_t: int, cfg: LightyearConfig = LightyearConfig()) -> np.ndarray:
    """Move ``own`` toward the mean of ``selected`` by ``gamma ** (t - base)``.

    Written as the convex combination ``(1 - w) own + w mean``, which is
    algebraically the same step and makes w == 1 return the plain mean bit for bit.
    """
    own = np.asarray(own, dtype=np.float64)
    if round_t < cfg.round_index_base:
        raise ValueError(f"round_t={round_t} precedes round_index_base={cfg.round_index_base}")
    if len(selected) == 0:
        return own.copy()
    _stack(selected, like=own)
    w = cfg.gamma ** (round_t - cfg.round_index_base)
    return (1.0 - w) * own + w * fedavg(selected)


def krum_scores(updates: Sequence[np.ndarray], f: int) -> np.ndarray:
    x = _stack(updates)
    n = x.shape[0]
    sq = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=-1)
    m = n - f - 2
    scores = np.empty(n)
    for i in range(n):
        others = np.sort(np.delete(sq[i], i))
        scores[i] = others[:m].sum()
    return scores


def krum_index(updates: Sequence[np.ndarray], f: int) -> int:
    n = len(updates)
    if f < 0 or n < f + 3:
        raise ValueError(f"krum needs n >= f + 3 (n={n}, f={f})")
    # argmin picks the first minimum: ties go to the lowest list index
    return int(np.argmin(krum_scores(updates, f)))


def krum(updates: Sequence[np.ndarray], f: int) -> np.ndarray:
    return np.asarray(updates[krum_index(updates, f)], dtype=np.float64).copy()


def balance_accepts(own: np.ndarray, updates: Sequence[np.ndarray], round_t: int, total_rounds: int, cfg: BaselineConfig) -> list[bool]:
    if total_rounds < 1:
        raise ValueError("total_rounds must be >= 1")
    own = np.asarray(own, dtype=np.float64)
    if len(updates) == 0:
        return []
    x = _stack(updates, like=own)
    bound = cfg.balance_gamma * np.exp(-cfg.balance_kappa * round_t / total_rounds) * np.linalg.norm(own)
    return [bool(d <= bound) for d in np.linalg.norm(x - own, axis=1)]


def balance(own: np.ndarray, updates: Sequence[np.ndarray], round_t: int, total_rounds: int, cfg: BaselineConfig = BaselineConfig()) -> np.ndarray:
    """Distance-gated averaging: keep updates within a shrinking radius of ``own``."""
    own = np.asarray(own, dtype=np.float64)
    accepted = [u for u, ok in zip(updates, balance_accepts(own, updates, round_t, total_rounds, cfg)) if ok]
    if not accepted:
        return own.copy()
    return 0.5 * own + 0.5 * fedavg(accepted)


def scclip(own: np.ndarray, updates: Sequence[np.ndarray], radius: float) -> np.ndarray:
    """Self-centered clipping: clip each difference to ``radius`` then average."""
    if len(updates) == 0:
        raise ValueError("scclip of an empty update list")
    if not radius > 0:
        raise ValueError("clipping radius must be > 0")
    own = np.asarray(own, dtype=np.float64)
    diffs = _stack(updates, like=own) - own
    norms = np.linalg.norm(diffs, axis=1)
    with np.errstate(divide="ignore"):
        scale = np.where(norms > 0, np.minimum(1.0, radius / norms), 1.0)
    return own + (diffs * scale[:, None]).mean(axis=0)


def median_distance(own: np.ndarray, updates: Sequence[np.ndarray]) -> float:
    own = np.asarray(own, dtype=np.float64)
    return float(np.median(np.linalg.norm(_stack(updates, like=own) - own, axis=1)))
