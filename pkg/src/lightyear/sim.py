"""Round-based federation simulator.

One round runs five phases with a barrier between each:

1. every client trains locally
2. malfunctioning clients replace their broadcast with a corrupted copy
   (their stored model stays honest)
3. broadcasts are delivered according to the topology
4. receivers score / select / aggregate according to ``cfg.method``
5. every client is evaluated on its validation and test splits

Randomness is drawn from streams keyed on (master seed, purpose, client, round),
so adding an attacker or changing an attack parameter never perturbs an honest
client's training randomness. Within a phase clients are independent, which is
what lets ``workers > 1`` run them on a thread pool without changing results.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import aggregate as agg
from .agreement import AgreementConfig, score_from_probs
from .attacks import AttackSpec, corrupt, stream
from .data import LabeledDataset, PartitionConfig, gen_gaussian_task, partition, split_three_way
from .metrics import accuracy_from_probs, ece_from_probs
from .nn import ModelSpec, OptimHyper, OptimizerState, ParamVector, init_params, predict_proba, train_local

METHODS = ("lightyear", "fedavg", "krum", "balance", "scclip")
TOPOLOGIES = ("p2p_full", "star")
STAR_METHODS = ("fedavg", "krum")


class ConfigError(ValueError):
    """Experiment configuration violates an invariant."""


@dataclass(frozen=True)
class Topology:
    kind: str
    n_clients: int

    def __post_init__(self):
        if self.kind not in TOPOLOGIES:
            raise ConfigError(f"topology must be one of {TOPOLOGIES}, got {self.kind!r}")
        if self.n_clients < 2:
            raise ConfigError("a federation needs at least 2 clients")

    def neighbors(self, i: int) -> list[int]:
        return [j for j in range(self.n_clients) if j != i]


@dataclass(frozen=True)
class DataConfig:
    n_classes: int = 10
    n_features: int = 10
    class_sep: float = 4.0
    partition: PartitionConfig = field(default_factory=PartitionConfig)


@dataclass(frozen=True)
class ModelConfig:
    hidden: tuple[int, ...] = (32, 32)
    activation: str = "relu"


@dataclass(frozen=True)
class SweepConfig:
    max_attackers: int = 5
    s_values: tuple[float, ...] = (0.0, 50.0, 120.5)
    attacker_counts: tuple[int, ...] = (1, 3)
    gamma_values: tuple[float, ...] = (1.0, 0.95)


@dataclass(frozen=True)
class ExperimentConfig:
    master_seed: int = 0
    topology: str = "p2p_full"
    method: str = "lightyear"
    rounds: int = 12
    n_malfunctioning: int = 0
    # explicit attacker ids; None draws a seeded, nested set of size n_malfunctioning
    attacker_ids: tuple[int, ...] | None = None
    attack: AttackSpec = field(default_factory=AttackSpec)
    agreement: AgreementConfig = field(default_factory=AgreementConfig)
    lightyear: agg.LightyearConfig = field(default_factory=agg.LightyearConfig)
    baseline: agg.BaselineConfig = field(default_factory=agg.BaselineConfig)
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    optim: OptimHyper = field(default_factory=OptimHyper)
    # p2p fedavg: average own model together with received ones
    fedavg_include_self: bool = True
    workers: int = 1
    sweep: SweepConfig = field(default_factory=SweepConfig)

    @property
    def n_clients(self) -> int:
        return self.data.partition.n_clients

    @property
    def topo(self) -> Topology:
        return Topology(self.topology, self.n_clients)

    def model_spec(self) -> ModelSpec:
        return ModelSpec((self.data.n_features, *self.model.hidden, self.data.n_classes), self.model.activation)

    def krum_f(self) -> int:
        f = self.baseline.krum_f
        return self.n_malfunctioning if f is None else f

    def validate(self) -> None:
        topo = self.topo
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if topo.kind == "star" and self.method not in STAR_METHODS:
            raise ConfigError(f"star topology supports {STAR_METHODS}; {self.method!r} needs a per-client reference model")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if not 0 <= self.n_malfunctioning < self.n_clients:
            raise ConfigError("n_malfunctioning must satisfy 0 <= n_malfunctioning < n_clients")
        if self.attacker_ids is not None:
            ids = set(self.attacker_ids)
            if len(ids) != self.n_malfunctioning or not ids <= set(range(self.n_clients)):
                raise ConfigError("attacker_ids must list n_malfunctioning distinct client ids")
        if self.method == "krum" and self.n_clients < self.krum_f() + 3:
            raise ConfigError(f"krum_f <= n_updates - 3 violated (n={self.n_clients}, f={self.krum_f()})")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.data.n_classes < 2 or self.data.n_features < 2:
            raise ConfigError("data needs n_classes >= 2 and n_features >= 2")
        try:
            self.model_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class ClientState:
    id: int
    model: ParamVector
    opt: OptimizerState
    train: LabeledDataset
    val: LabeledDataset
    test: LabeledDataset
    malfunction: AttackSpec | None = None
    scclip_radius: float | None = None


@dataclass(frozen=True)
class ClientRecord:
    client_id: int
    test_accuracy: float
    val_accuracy: float
    ece: float
    selected_set: frozenset
    composite_scores: dict
    attack_kind: str


@dataclass(frozen=True)
class RoundLog:
    round: int
    clients: list[ClientRecord]

    @property
    def mean_test_accuracy(self) -> float:
        return float(np.mean([c.test_accuracy for c in self.clients]))

    @property
    def mean_val_accuracy(self) -> float:
        return float(np.mean([c.val_accuracy for c in self.clients]))


def derived_seed(master_seed: int, purpose: str, *keys: int) -> int:
    return int(stream(master_seed, purpose, *keys).integers(2**63 - 1))


def attacker_order(master_seed: int, n_clients: int) -> list[int]:
    """Seeded ranking of clients; the first k are the attackers, so sets nest in k."""
    return [int(i) for i in stream(master_seed, "attackers").permutation(n_clients)]


def attacker_ids(cfg: ExperimentConfig) -> list[int]:
    if cfg.attacker_ids is not None:
        return sorted(cfg.attacker_ids)
    return sorted(attacker_order(cfg.master_seed, cfg.n_clients)[: cfg.n_malfunctioning])


def client_shards(cfg: ExperimentConfig) -> list[tuple[LabeledDataset, LabeledDataset, LabeledDataset]]:
    d, p = cfg.data, cfg.data.partition
    pool = gen_gaussian_task(
        d.n_classes, d.n_features, p.n_clients * p.samples_per_client, d.class_sep,
        derived_seed(cfg.master_seed, "task"),
    )
    shards = partition(pool, p, derived_seed(cfg.master_seed, "partition"))
    return [split_three_way(s, p.split_fractions, derived_seed(cfg.master_seed, "split", i)) for i, s in enumerate(shards)]


def build_federation(cfg: ExperimentConfig) -> list[ClientState]:
    cfg.validate()
    spec = cfg.model_spec()
    # every client starts from the same initial model, as if a seed model were distributed
    theta0 = init_params(spec, derived_seed(cfg.master_seed, "init"))
    bad = set(attacker_ids(cfg))
    states = []
    for i, (tr, va, te) in enumerate(client_shards(cfg)):
        states.append(ClientState(
            id=i, model=theta0.copy(), opt=OptimizerState.fresh(spec, cfg.optim),
            train=tr, val=va, test=te,
            malfunction=cfg.attack if i in bad else None,
        ))
    return states


def _pmap(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def local_phase(states: list[ClientState], cfg: ExperimentConfig, round_t: int) -> list[ClientState]:
    def step(s: ClientState) -> ClientState:
        model, opt = train_local(s.model, s.opt, s.train, derived_seed(cfg.master_seed, "train", s.id, round_t))
        return replace(s, model=model, opt=opt)

    return _pmap(step, states, cfg.workers)


def broadcast_phase(states: list[ClientState], cfg: ExperimentConfig, round_t: int) -> list[tuple[np.ndarray, str]]:
    def send(s: ClientState) -> tuple[np.ndarray, str]:
        if s.malfunction is None or s.malfunction.kind == "none":
            return s.model.values, "none"
        rng = stream(cfg.master_seed, "attack", s.id, round_t)
        return corrupt(s.model.values, s.malfunction, s.model.spec, rng)

    return _pmap(send, states, cfg.workers)


@dataclass
class _Outcome:
    values: np.ndarray
    selected: frozenset
    scores: dict
    scclip_radius: float | None = None


def _aggregate_p2p(s: ClientState, received: dict[int, np.ndarray], cfg: ExperimentConfig, round_t: int) -> _Outcome:
    own = s.model.values
    ids = sorted(received)
    if cfg.method == "lightyear":
        p_i = predict_proba(s.model, s.val.features)
        scores, chosen = {}, []
        for j in ids:
            p_j = predict_proba(s.model.with_values(received[j]), s.val.features)
            rep = score_from_probs(p_i, p_j, s.val.labels, cfg.agreement, peer_id=j)
            scores[j] = rep.composite
            if rep.selected:
                chosen.append(j)
        new = agg.lightyear_aggregate(own, [received[j] for j in chosen], round_t, cfg.lightyear)
        return _Outcome(new, frozenset(chosen), scores)
    if cfg.method == "fedavg":
        pool = {**received, s.id: own} if cfg.fedavg_include_self else received
        # id order (own model in its id slot) gives every client the same summation order
        return _Outcome(agg.fedavg([pool[j] for j in sorted(pool)]), frozenset(ids), {})
    if cfg.method == "krum":
        order = sorted([*ids, s.id])
        pool = {**received, s.id: own}
        k = order[agg.krum_index([pool[j] for j in order], cfg.krum_f())]
        return _Outcome(pool[k].copy(), frozenset({k} - {s.id}), {})
    if cfg.method == "balance":
        ok = agg.balance_accepts(own, [received[j] for j in ids], round_t, cfg.rounds, cfg.baseline)
        new = agg.balance(own, [received[j] for j in ids], round_t, cfg.rounds, cfg.baseline)
        return _Outcome(new, frozenset(j for j, a in zip(ids, ok) if a), {})
    # scclip
    ups = [received[j] for j in ids]
    radius = cfg.baseline.scclip_radius or s.scclip_radius
    if radius is None:
        radius = max(agg.median_distance(own, ups), 1e-12)
    return _Outcome(agg.scclip(own, ups, radius), frozenset(ids), {}, radius)


def run_round(states: list[ClientState], cfg: ExperimentConfig, round_t: int) -> tuple[list[ClientState], RoundLog]:
    if not 1 <= round_t <= cfg.rounds:
        raise ValueError(f"round {round_t} outside 1..{cfg.rounds}")
    topo = cfg.topo
    trained = local_phase(states, cfg, round_t)
    sent = broadcast_phase(trained, cfg, round_t)
    kinds = [k for _, k in sent]

    if topo.kind == "star":
        ups = [v for v, _ in sent]
        if cfg.method == "fedavg":
            g = agg.fedavg(ups)
        else:
            g = agg.krum(ups, cfg.krum_f())
        everyone = frozenset(range(topo.n_clients))
        outcomes = [_Outcome(g.copy(), everyone - {s.id}, {}) for s in trained]
    else:
        def recv(s: ClientState) -> _Outcome:
            return _aggregate_p2p(s, {j: sent[j][0] for j in topo.neighbors(s.id)}, cfg, round_t)

        outcomes = _pmap(recv, trained, cfg.workers)

    new_states = [
        replace(s, model=s.model.with_values(o.values), scclip_radius=o.scclip_radius or s.scclip_radius)
        for s, o in zip(trained, outcomes)
    ]

    def evaluate(s: ClientState) -> tuple[float, float, float]:
        pt = predict_proba(s.model, s.test.features)
        pv = predict_proba(s.model, s.val.features)
        return (
            accuracy_from_probs(pt, s.test.labels),
            accuracy_from_probs(pv, s.val.labels),
            ece_from_probs(pt, s.test.labels, cfg.agreement.ece_bins),
        )

    evals = _pmap(evaluate, new_states, cfg.workers)
    records = [
        ClientRecord(s.id, te, va, e, o.selected, o.scores, kind)
        for s, o, (te, va, e), kind in zip(new_states, outcomes, evals, kinds)
    ]
    return new_states, RoundLog(round_t, records)


def simulate(cfg: ExperimentConfig) -> tuple[list[RoundLog], list[ClientState]]:
    states = build_federation(cfg)
    logs = []
    for t in range(1, cfg.rounds + 1):
        states, log = run_round(states, cfg, t)
        logs.append(log)
    return logs, states


def run_experiment(cfg: ExperimentConfig) -> list[RoundLog]:
    return simulate(cfg)[0]
