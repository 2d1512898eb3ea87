"""Agreement score between a client's reference model and a received update.

Everything is evaluated on the receiving client's validation split. The score
averages three components:

* accuracy agreement: difference of correctness indicators, either signed
  (``literal``) or folded to ``1 - |diff|`` (``symmetric``)
* calibration agreement: ``1 - |ECE_i - ECE_j|``
* sharpness agreement: ``1 - mean |H(p_i(x)) - H(p_j(x))|``
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable

import numpy as np

from .data import LabeledDataset
from .metrics import ece_from_probs, entropy, predictions
from .nn import ParamVector, predict_proba

ACC_MODES = ("literal", "symmetric")


@dataclass(frozen=True)
class AgreementConfig:
    tau: float = 0.75
    acc_mode: str = "symmetric"
    ece_bins: int = 10
    entropy_normalized: bool = True

    def __post_init__(self):
        if self.acc_mode not in ACC_MODES:
            raise ValueError(f"acc_mode must be one of {ACC_MODES}, got {self.acc_mode!r}")
        if self.ece_bins < 1:
            raise ValueError("ece_bins must be >= 1")


@dataclass(frozen=True)
class AgreementReport:
    peer_id: Hashable
    a_acc: float
    a_ece: float
    a_sharp: float
    composite: float
    selected: bool


def _probs_pair(h_i: ParamVector, h_j: ParamVector, V: LabeledDataset) -> tuple[np.ndarray, np.ndarray]:
    if h_i.spec != h_j.spec:
        raise ValueError("models being compared do not share a ModelSpec")
    if V.n == 0:
        raise ValueError("agreement needs a nonempty validation set")
    return predict_proba(h_i, V.features), predict_proba(h_j, V.features)


def _acc(p_i: np.ndarray, p_j: np.ndarray, y: np.ndarray, mode: str) -> float:
    signed = float(np.mean((predictions(p_i) == y).astype(np.float64) - (predictions(p_j) == y)))
    return signed if mode == "literal" else 1.0 - abs(signed)


def _ece(p_i: np.ndarray, p_j: np.ndarray, y: np.ndarray, bins: int) -> float:
    return 1.0 - abs(ece_from_probs(p_i, y, bins) - ece_from_probs(p_j, y, bins))


def _sharp(p_i: np.ndarray, p_j: np.ndarray, normalized: bool) -> float:
    return 1.0 - float(np.mean(np.abs(entropy(p_i, normalized) - entropy(p_j, normalized))))


def acc_agreement(h_i: ParamVector, h_j: ParamVector, V: LabeledDataset, mode: str = "symmetric") -> float:
    if mode not in ACC_MODES:
        raise ValueError(f"unknown acc_mode {mode!r}")
    p_i, p_j = _probs_pair(h_i, h_j, V)
    return _acc(p_i, p_j, V.labels, mode)


def ece_agreement(h_i: ParamVector, h_j: ParamVector, V: LabeledDataset, ece_bins: int = 10) -> float:
    p_i, p_j = _probs_pair(h_i, h_j, V)
    return _ece(p_i, p_j, V.labels, ece_bins)


def sharp_agreement(h_i: ParamVector, h_j: ParamVector, V: LabeledDataset, entropy_normalized: bool = True) -> float:
    p_i, p_j = _probs_pair(h_i, h_j, V)
    return _sharp(p_i, p_j, entropy_normalized)


def score_from_probs(p_i: np.ndarray, p_j: np.ndarray, labels: np.ndarray, cfg: AgreementConfig, peer_id=None) -> AgreementReport:
    """Score from precomputed class probabilities on the validation rows."""
    a_acc = _acc(p_i, p_j, labels, cfg.acc_mode)
    a_ece = _ece(p_i, p_j, labels, cfg.ece_bins)
    a_sharp = _sharp(p_i, p_j, cfg.entropy_normalized)
    composite = (a_acc + a_ece + a_sharp) / 3.0
    return AgreementReport(peer_id, a_acc, a_ece, a_sharp, composite, composite >= cfg.tau)


def agreement_score(h_i: ParamVector, h_j: ParamVector, V: LabeledDataset, cfg: AgreementConfig = AgreementConfig(), peer_id=None) -> AgreementReport:
    p_i, p_j = _probs_pair(h_i, h_j, V)
    return score_from_probs(p_i, p_j, V.labels, cfg, peer_id)


def select_aggregation_set(reports: Iterable[AgreementReport], tau: float) -> set:
    return {r.peer_id for r in reports if r.composite >= tau}
