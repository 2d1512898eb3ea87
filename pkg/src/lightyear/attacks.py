"""Malfunction injectors: additive noise, sign flipping, random weights, dynamic mix."""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .nn import ModelSpec, init_params

KINDS = ("none", "ana", "sfa", "random_weights", "dynamic")
DYNAMIC_CHOICES = ("ana", "sfa", "random_weights")
ANA_FORMS = ("plain", "scaled")


@dataclass(frozen=True)
class AttackSpec:
    kind: str = "none"
    ana_scaling_s: float = 120.5
    ana_sigma: float = 0.0
    sfa_alpha: float = 1.0
    ana_form: str = "scaled"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"attack kind must be one of {KINDS}, got {self.kind!r}")
        if self.ana_form not in ANA_FORMS:
            raise ValueError(f"ana_form must be one of {ANA_FORMS}, got {self.ana_form!r}")
        if self.ana_scaling_s < 0 or self.ana_sigma < 0:
            raise ValueError("ANA noise levels must be >= 0")
        if not self.sfa_alpha > 0:
            raise ValueError("sfa_alpha must be > 0")


@dataclass(frozen=True)
class MalfunctionAssignment:
    client_ids: frozenset
    spec: AttackSpec


def stream(master_seed: int, purpose: str, *keys: int) -> np.random.Generator:
    """Independent generator keyed by (master seed, purpose, keys...)."""
    return np.random.default_rng([master_seed, zlib.crc32(purpose.encode()), *keys])


def ana(params: np.ndarray, spec: AttackSpec, rng: np.random.Generator) -> np.ndarray:
    """Gaussian noise: ``theta + N(0, sigma^2)`` (plain) or ``theta * (1 + eps * s/100)`` (scaled)."""
    theta = np.asarray(params, dtype=np.float64)
    eps = rng.standard_normal(theta.shape)
    if spec.ana_form == "plain":
        out = theta + spec.ana_sigma * eps
    else:
        out = theta + eps * (spec.ana_scaling_s / 100.0) * theta
    return out


def sfa(params: np.ndarray, alpha: float = 1.0) -> np.ndarray:
    if not alpha > 0:
        raise ValueError("sign-flip alpha must be > 0")
    return -alpha * np.asarray(params, dtype=np.float64)


def random_update(spec: ModelSpec, rng: np.random.Generator) -> np.ndarray:
    return init_params(spec, rng).values


def dynamic_choose(rng: np.random.Generator) -> str:
    return DYNAMIC_CHOICES[int(rng.integers(len(DYNAMIC_CHOICES)))]


def corrupt(params: np.ndarray, spec: AttackSpec, model_spec: ModelSpec, rng: np.random.Generator) -> tuple[np.ndarray, str]:
    """Apply ``spec`` to an honest update; returns (broadcast, kind actually used)."""
    kind = dynamic_choose(rng) if spec.kind == "dynamic" else spec.kind
    # overflow is reported below as an error, not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        if kind == "none":
            out = np.asarray(params, dtype=np.float64).copy()
        elif kind == "ana":
            out = ana(params, spec, rng)
        elif kind == "sfa":
            out = sfa(params, spec.sfa_alpha)
        else:
            out = random_update(model_spec, rng)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(f"{kind} attack produced non-finite parameters")
    return out, kind
