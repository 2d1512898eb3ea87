from dataclasses import replace

import numpy as np
import pytest

from lightyear.aggregate import BaselineConfig, LightyearConfig
from lightyear.attacks import AttackSpec
from lightyear.presets import separable_task
from lightyear.sim import (
    ConfigError,
    attacker_ids,
    attacker_order,
    broadcast_phase,
    build_federation,
    local_phase,
    run_experiment,
    run_round,
    simulate,
)


def small(seed=0, method="lightyear", **kw):
    """4 clients, 3 rounds, 200 samples each: fast enough for unit tests."""
    cfg = separable_task(seed, method, **{"rounds": 3, **kw})
    part = replace(cfg.data.partition, n_clients=4, samples_per_client=200)
    return replace(cfg, data=replace(cfg.data, partition=part))


def models(states):
    return [s.model.values for s in states]


def logs_equal(a, b):
    return all(x.round == y.round and x.clients == y.clients for x, y in zip(a, b)) and len(a) == len(b)


def test_fedavg_all_clients_end_identical():
    cfg = small(method="fedavg")
    new, _ = run_round(build_federation(cfg), cfg, 1)
    for v in models(new)[1:]:
        assert np.array_equal(v, models(new)[0])


def test_lightyear_gamma_one_accept_all_reduces_to_neighbour_fedavg():
    ly = small(lightyear=LightyearConfig(gamma=1.0))
    ly = replace(ly, agreement=replace(ly.agreement, tau=-1.0))
    fa = replace(ly, method="fedavg", fedavg_include_self=False)
    states = build_federation(ly)
    a, log = run_round(states, ly, 1)
    b, _ = run_round(states, fa, 1)
    for x, y in zip(models(a), models(b)):
        assert np.array_equal(x, y)
    assert all(c.selected_set == frozenset(range(4)) - {c.client_id} for c in log.clients)


def test_same_seed_bit_identical_and_worker_independent():
    cfg = small(n_malfunctioning=1, attack="dynamic")
    one = run_experiment(cfg)
    assert logs_equal(one, run_experiment(cfg))
    assert logs_equal(one, run_experiment(replace(cfg, workers=4)))


def test_star_fedavg_matches_all_pairs_p2p():
    p2p = small(method="fedavg")
    star = replace(p2p, topology="star")
    states = build_federation(p2p)
    a, _ = run_round(states, p2p, 1)
    b, _ = run_round(states, star, 1)
    for x, y in zip(models(a), models(b)):
        assert np.allclose(x, y, rtol=0, atol=1e-12)


def test_star_krum_gives_one_global_model():
    cfg = small(method="krum", topology="star", n_malfunctioning=1)
    new, _ = run_round(build_federation(cfg), cfg, 1)
    assert all(np.array_equal(v, models(new)[0]) for v in models(new))


def test_malfunctioning_client_trains_honestly():
    clean = small()
    bad = small(n_malfunctioning=1, attacker_ids=(2,))
    a = local_phase(build_federation(clean), clean, 1)
    b = local_phase(build_federation(bad), bad, 1)
    assert all(np.array_equal(x, y) for x, y in zip(models(a), models(b)))
    sent = broadcast_phase(b, bad, 1)
    assert sent[2][1] == "sfa" and np.array_equal(sent[2][0], -b[2].model.values)
    assert all(sent[i][1] == "none" and sent[i][0] is b[i].model.values for i in (0, 1, 3))


def test_attack_parameters_do_not_touch_honest_training():
    base = small(n_malfunctioning=1, attacker_ids=(0,))
    x = local_phase(build_federation(base), base, 1)
    for kind in ("ana", "random_weights", "dynamic"):
        other = replace(base, attack=AttackSpec(kind=kind, ana_scaling_s=300.0))
        y = local_phase(build_federation(other), other, 1)
        assert all(np.array_equal(p, q) for p, q in zip(models(x), models(y)))


def test_log_shape_eight_clients_twelve_rounds():
    cfg = separable_task(0, "fedavg")
    logs = run_experiment(cfg)
    assert len(logs) == 12 and all(len(log.clients) == 8 for log in logs)
    assert [c.client_id for c in logs[0].clients] == list(range(8))


def test_lightyear_costs_nothing_without_attackers():
    ly = run_experiment(separable_task(0, "lightyear"))[-1].mean_test_accuracy
    fa = run_experiment(separable_task(0, "fedavg"))[-1].mean_test_accuracy
    assert ly >= fa - 0.02


def test_lightyear_beats_fedavg_under_sign_flips():
    ly = run_experiment(separable_task(0, "lightyear", n_malfunctioning=3))[-1].mean_test_accuracy
    fa = run_experiment(separable_task(0, "fedavg", n_malfunctioning=3))[-1].mean_test_accuracy
    assert ly >= fa + 0.15


@pytest.mark.parametrize("method", ["krum", "balance", "scclip"])
def test_baselines_run(method):
    cfg = small(method=method, n_malfunctioning=1, baseline=BaselineConfig(krum_f=1))
    logs, states = simulate(cfg)
    assert len(logs) == 3
    assert all(0.0 <= c.test_accuracy <= 1.0 and np.isfinite(c.ece) for log in logs for c in log.clients)
    if method == "scclip":
        assert all(s.scclip_radius is not None and s.scclip_radius > 0 for s in states)


def test_attacker_sets_nest():
    order = attacker_order(7, 8)
    assert sorted(order) == list(range(8))
    sets = [set(attacker_ids(separable_task(7, n_malfunctioning=k))) for k in range(8)]
    assert all(a <= b for a, b in zip(sets, sets[1:]))


@pytest.mark.parametrize(
    "kw,msg",
    [
        (dict(topology="star"), "star topology"),
        (dict(method="krum", n_malfunctioning=2, baseline=BaselineConfig(krum_f=2)), "krum_f"),
        (dict(n_malfunctioning=4), "n_malfunctioning"),
        (dict(n_malfunctioning=1, attacker_ids=(1, 2)), "attacker_ids"),
        (dict(method="median"), "method"),
        (dict(rounds=0), "rounds"),
    ],
)
def test_invalid_configs(kw, msg):
    with pytest.raises(ConfigError, match=msg):
        small(**kw).validate()


def test_round_index_checked():
    cfg = small()
    with pytest.raises(ValueError):
        run_round(build_federation(cfg), cfg, 4)
