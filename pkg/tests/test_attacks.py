from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lightyear.attacks import AttackSpec, ana, corrupt, dynamic_choose, random_update, sfa, stream
from lightyear.data import gen_gaussian_task, split_three_way
from lightyear.metrics import accuracy
from lightyear.nn import ModelSpec, OptimHyper, OptimizerState, init_params, train_local

params = arrays(np.float64, st.integers(1, 20), elements=st.floats(-1e3, 1e3))


def test_zero_noise_is_identity():
    theta = np.array([1.0, -2.0, 3.5])
    rng = np.random.default_rng(0)
    assert np.array_equal(ana(theta, AttackSpec(kind="ana", ana_form="plain", ana_sigma=0.0), rng), theta)
    assert np.array_equal(ana(theta, AttackSpec(kind="ana", ana_scaling_s=0.0), rng), theta)


class UnitNoise:
    def standard_normal(self, shape):
        return np.ones(shape)


def test_scaled_noise_arithmetic():
    out = ana(np.array([2.0]), AttackSpec(kind="ana", ana_scaling_s=50.0), UnitNoise())
    assert out[0] == 3.0


def test_plain_noise_arithmetic():
    out = ana(np.array([2.0]), AttackSpec(kind="ana", ana_form="plain", ana_sigma=0.5), UnitNoise())
    assert out[0] == 2.5


def test_sign_flip_fixtures():
    assert np.array_equal(sfa(np.array([1.0, -2.0])), [-1.0, 2.0])
    assert np.array_equal(sfa(np.array([0.5]), 2.0), [-1.0])


@given(params)
def test_sign_flip_involution(theta):
    assert np.array_equal(sfa(sfa(theta)), theta)


def test_random_update_shape_and_independence():
    spec = ModelSpec((4, 6, 3))
    a = random_update(spec, stream(0, "attack", 1, 1))
    b = random_update(spec, stream(0, "attack", 1, 2))
    assert a.shape == (spec.n_params,)
    assert not np.array_equal(a, b)
    honest_1, honest_2 = np.zeros(spec.n_params), np.ones(spec.n_params)
    x, _ = corrupt(honest_1, AttackSpec(kind="random_weights"), spec, stream(0, "attack", 1, 1))
    y, _ = corrupt(honest_2, AttackSpec(kind="random_weights"), spec, stream(0, "attack", 1, 1))
    assert np.array_equal(x, y)


def test_dynamic_frequencies():
    rng = np.random.default_rng(0)
    counts = Counter(dynamic_choose(rng) for _ in range(3000))
    assert set(counts) == {"ana", "sfa", "random_weights"}
    assert all(0.30 <= c / 3000 <= 0.37 for c in counts.values())


def test_dynamic_schedule_reproducible():
    schedule = [dynamic_choose(stream(5, "attack", 2, t)) for t in range(1, 13)]
    again = [dynamic_choose(stream(5, "attack", 2, t)) for t in range(1, 13)]
    assert schedule == again
    assert dynamic_choose(np.random.default_rng(3)) == dynamic_choose(np.random.default_rng(3))


# random_weights output has the model spec's length, checked separately above
@given(params, st.sampled_from(["none", "ana", "sfa", "dynamic"]), st.integers(0, 1000))
def test_corrupt_is_pure_and_finite(theta, kind, seed):
    before = theta.copy()
    out, used = corrupt(theta, AttackSpec(kind=kind, ana_scaling_s=120.5), ModelSpec((1, 2)), np.random.default_rng(seed))
    assert np.array_equal(theta, before)
    if used != "random_weights":
        assert out.shape == theta.shape
    assert np.isfinite(out).all()


def test_corrupt_rejects_overflow():
    with pytest.raises(FloatingPointError):
        corrupt(np.array([1e308]), AttackSpec(kind="sfa", sfa_alpha=10.0), ModelSpec((1, 2)), np.random.default_rng(0))


def test_attack_spec_validation():
    with pytest.raises(ValueError):
        AttackSpec(kind="label_flip")
    with pytest.raises(ValueError):
        AttackSpec(sfa_alpha=0.0)
    with pytest.raises(ValueError):
        AttackSpec(ana_form="multiplicative")


def test_streams_are_keyed():
    a = stream(1, "attack", 3, 4).random()
    assert a == stream(1, "attack", 3, 4).random()
    assert a != stream(1, "train", 3, 4).random()
    assert a != stream(1, "attack", 3, 5).random()


def test_default_scaled_noise_hurts_trained_model():
    worse = 0
    for seed in range(20):
        data = gen_gaussian_task(4, 6, 800, 3.0, seed=seed)
        train, val, _ = split_three_way(data, seed=seed)
        h = init_params(ModelSpec((6, 16, 4)), seed)
        opt = OptimizerState.fresh(h.spec, OptimHyper(learning_rate=0.05))
        for e in range(8):
            h, opt = train_local(h, opt, train, seed=e)
        noisy = h.with_values(ana(h.values, AttackSpec(kind="ana"), stream(seed, "attack", 0, 1)))
        worse += accuracy(noisy, val) < accuracy(h, val)
    assert worse >= 19
