"""Desk-scale scenarios used by the acceptance suite and the experiment scripts.

``separable_task`` is the 8-client label-skew setting (10 Gaussian classes,
Dirichlet alpha 0.5), ``feature_shift_task`` the 5-client two-group covariate
shift setting. Both train a 2x32 ReLU network; the learning rate is raised from
the 1e-3 default so that a single local epoch per round makes visible progress.
"""
from __future__ import annotations

from dataclasses import replace

from .attacks import AttackSpec
from .data import PartitionConfig
from .nn import OptimHyper
from .sim import DataConfig, ExperimentConfig, ModelConfig

DESK_OPTIM = OptimHyper(learning_rate=0.05, momentum=0.9, weight_decay=5e-4, batch_size=32, local_epochs=1)
DESK_MODEL = ModelConfig(hidden=(32, 32), activation="relu")


def separable_task(seed: int = 0, method: str = "lightyear", attack: str = "sfa", **overrides) -> ExperimentConfig:
    cfg = ExperimentConfig(
        master_seed=seed,
        method=method,
        rounds=12,
        attack=AttackSpec(kind=attack),
        data=DataConfig(
            n_classes=10, n_features=10, class_sep=4.0,
            partition=PartitionConfig(n_clients=8, strategy="dirichlet_label_skew", dirichlet_alpha=0.5, samples_per_client=500),
        ),
        model=DESK_MODEL,
        optim=DESK_OPTIM,
    )
    return replace(cfg, **overrides)


def feature_shift_task(seed: int = 0, method: str = "lightyear", **overrides) -> ExperimentConfig:
    cfg = ExperimentConfig(
        master_seed=seed,
        method=method,
        rounds=12,
        agreement=replace(ExperimentConfig().agreement, tau=0.6),
        data=DataConfig(
            n_classes=10, n_features=10, class_sep=4.0,
            partition=PartitionConfig(
                n_clients=5, strategy="feature_shift_groups",
                group_rotation_deg=90.0, group_shift=2.0, samples_per_client=500,
            ),
        ),
        model=DESK_MODEL,
        optim=DESK_OPTIM,
    )
    return replace(cfg, **overrides)
