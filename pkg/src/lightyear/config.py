"""TOML experiment configs.

Layout (every key optional; omitted keys take the dataclass defaults, whose
optimiser values are the standard training setup: lr 1e-3, momentum 0.9,
weight decay 5e-4, batch 32, 1 local epoch, 12 rounds, gamma 0.95, tau 0.75)::

    seed = 0
    n_clients = 8
    topology = "p2p_full"          # or "star"
    method = "lightyear"           # fedavg | krum | balance | scclip
    rounds = 12
    n_malfunctioning = 0
    attacker_ids = [1, 4]          # optional explicit attacker set
    fedavg_include_self = true
    workers = 1

    [attack]      kind, ana_form, ana_scaling_s, ana_sigma, sfa_alpha
    [agreement]   tau, acc_mode, ece_bins, entropy_normalized
    [lightyear]   gamma, round_index_base
    [baseline]    krum_f, balance_gamma, balance_kappa, scclip_radius
    [data]        n_classes, n_features, class_sep, strategy, dirichlet_alpha,
                  group_rotation_deg, group_shift, samples_per_client, split_fractions
    [model]       hidden, activation
    [optim]       learning_rate, momentum, weight_decay, batch_size, local_epochs
    [sweep]       max_attackers, s_values, attacker_counts, gamma_values

Unknown keys are errors, with the closest known key suggested.
"""
from __future__ import annotations

import dataclasses
import difflib
import hashlib
import json
import sys
import typing
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .aggregate import BaselineConfig, LightyearConfig
from .agreement import AgreementConfig
from .attacks import AttackSpec
from .data import PartitionConfig
from .nn import OptimHyper
from .sim import ConfigError, DataConfig, ExperimentConfig, ModelConfig, SweepConfig

SECTIONS = {
    "attack": AttackSpec,
    "agreement": AgreementConfig,
    "lightyear": LightyearConfig,
    "baseline": BaselineConfig,
    "model": ModelConfig,
    "optim": OptimHyper,
    "sweep": SweepConfig,
}
TOP_LEVEL = {
    "seed": "master_seed",
    "n_clients": None,
    "topology": "topology",
    "method": "method",
    "rounds": "rounds",
    "n_malfunctioning": "n_malfunctioning",
    "attacker_ids": "attacker_ids",
    "fedavg_include_self": "fedavg_include_self",
    "workers": "workers",
}
DATA_KEYS = {"n_classes", "n_features", "class_sep"}
PARTITION_KEYS = {f.name for f in dataclasses.fields(PartitionConfig)} - {"n_clients"}


def _unknown(key: str, known, where: str) -> ConfigError:
    hint = difflib.get_close_matches(key, list(known), n=1)
    msg = f"unknown key {key!r} in {where}"
    if hint:
        msg += f"; did you mean {hint[0]!r}?"
    return ConfigError(msg)


def _coerce(value, tp, where: str):
    """Check a TOML value against a (simple) dataclass field annotation."""
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union or (sys.version_info >= (3, 10) and origin is __import__("types").UnionType):
        if value is None:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], where)
    if origin is tuple:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        elem = args[0] if args else typing.Any
        return tuple(_coerce(v, elem, where) for v in value)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    return value


def _build(cls, table: dict, where: str, skip=frozenset()):
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)} - set(skip)
    kwargs = {}
    for key, value in table.items():
        if key not in known:
            raise _unknown(key, known, where)
        kwargs[key] = _coerce(value, hints[key], f"{where}.{key}")
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{where}] {exc}") from None


def config_from_dict(raw: dict) -> ExperimentConfig:
    known_top = set(TOP_LEVEL) | set(SECTIONS) | {"data"}
    for key in raw:
        if key not in known_top:
            raise _unknown(key, known_top, "top level")
    top_hints = typing.get_type_hints(ExperimentConfig)
    kwargs = {}
    for key, target in TOP_LEVEL.items():
        if key in raw and target is not None:
            kwargs[target] = _coerce(raw[key], top_hints[target], key)
    for name, cls in SECTIONS.items():
        if name in raw:
            if not isinstance(raw[name], dict):
                raise ConfigError(f"[{name}] must be a table")
            kwargs[name] = _build(cls, raw[name], name)

    data = dict(raw.get("data", {}))
    for key in data:
        if key not in DATA_KEYS | PARTITION_KEYS:
            raise _unknown(key, DATA_KEYS | PARTITION_KEYS, "data")
    part = {k: data.pop(k) for k in list(data) if k in PARTITION_KEYS}
    if "n_clients" in raw:
        part["n_clients"] = raw["n_clients"]
    partition = _build(PartitionConfig, part, "data")
    data_cfg = _build(DataConfig, data, "data", skip={"partition"})
    kwargs["data"] = dataclasses.replace(data_cfg, partition=partition)

    cfg = ExperimentConfig(**kwargs)
    cfg.validate()
    return cfg


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return config_from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Plain nested dict of every value the run uses (tuples become lists)."""
    return json.loads(json.dumps(dataclasses.asdict(cfg)))


def run_id(cfg: ExperimentConfig) -> str:
    """Stable id from the config contents; worker count does not change results so it is excluded."""
    d = config_to_dict(cfg)
    d.pop("workers")
    digest = hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]
    return f"{digest}-s{cfg.master_seed}"
