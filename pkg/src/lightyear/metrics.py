"""Accuracy, binned expected calibration error and predictive entropy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .nn import ParamVector, predict_proba


@dataclass(frozen=True)
class EceConfig:
    n_bins: int = 10

    def __post_init__(self):
        if self.n_bins < 1:
            raise ValueError("n_bins must be >= 1")


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    ece: float
    mean_normalized_entropy: float


def _require_rows(data: LabeledDataset) -> None:
    if data.n == 0:
        raise ValueError("metric undefined on an empty dataset")


def predictions(probs: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. ties go to the lowest class index
    return np.argmax(probs, axis=1)


def accuracy_from_probs(probs: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(predictions(probs) == labels))


def accuracy(params: ParamVector, data: LabeledDataset) -> float:
    _require_rows(data)
    return accuracy_from_probs(predict_proba(params, data.features), data.labels)


def binned_ece(confidences, correct, n_bins: int = 10, low: float = 0.0) -> float:
    """ECE over ``n_bins`` equal-width bins spanning [low, 1].

    Bins are half-open (lo, hi]; the first bin also takes values <= low.
    Empty bins contribute nothing.
    """
    conf = np.asarray(confidences, dtype=np.float64)
    hit = np.asarray(correct, dtype=np.float64)
    if conf.size == 0:
        raise ValueError("ECE undefined on an empty dataset")
    edges = np.linspace(low, 1.0, n_bins + 1)
    bins = np.searchsorted(edges[1:-1], conf, side="left")
    total = 0.0
    for b in range(n_bins):
        mask = bins == b
        n_b = int(mask.sum())
        if n_b:
            total += n_b / conf.size * abs(hit[mask].mean() - conf[mask].mean())
    return float(total)


def ece_from_probs(probs: np.ndarray, labels: np.ndarray, n_bins: int = 10) -> float:
    # max-probability can never fall below 1/K, so bins cover [1/K, 1]
    low = 1.0 / probs.shape[1]
    return binned_ece(probs.max(axis=1), predictions(probs) == labels, n_bins, low)


def ece(params: ParamVector, data: LabeledDataset, cfg: EceConfig = EceConfig()) -> float:
    _require_rows(data)
    return ece_from_probs(predict_proba(params, data.features), data.labels, cfg.n_bins)


def entropy(probs: np.ndarray, normalized: bool = True) -> np.ndarray:
    """Row-wise Shannon entropy (nats) with 0 ln 0 = 0, optionally divided by ln K."""
    p = np.asarray(probs, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    h = -terms.sum(axis=-1)
    h = np.maximum(h, 0.0)
    if normalized:
        h = np.minimum(h / np.log(p.shape[-1]), 1.0)
    return h


def normalized_entropy(probs) -> float:
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size < 2 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("normalized_entropy expects a probability vector of length >= 2 summing to 1")
    return float(entropy(p))


def evaluate(params: ParamVector, data: LabeledDataset, cfg: EceConfig = EceConfig()) -> EvalReport:
    _require_rows(data)
    probs = predict_proba(params, data.features)
    return EvalReport(
        accuracy=accuracy_from_probs(probs, data.labels),
        ece=ece_from_probs(probs, data.labels, cfg.n_bins),
        mean_normalized_entropy=float(entropy(probs).mean()),
    )
