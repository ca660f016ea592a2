import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from mixedne.envs import (
    EnvState,
    MixingConfig,
    ToyEnv,
    ToyMdpConfig,
    mix_actions,
    normalize_state,
    reset,
    reward,
    step,
    transition,
)
from mixedne.rng import make_rng, standard_normal, uniform


def test_reward_examples():
    assert reward(0.0) == 4.0
    mp = mpmath.sin(mpmath.sqrt(mpmath.mpf("1.7"))) + mpmath.cos(mpmath.sqrt(mpmath.mpf("0.3"))) + 3
    assert reward(1.0) == pytest.approx(float(mp), abs=1e-14)
    assert reward(1.0) == pytest.approx(4.8183, abs=1e-4)


@given(st.floats(-1e4, 1e4))
def test_reward_range(s):
    assert 1.0 <= reward(s) <= 5.0


def test_return_bounds():
    lo, hi = ToyMdpConfig().return_bounds()
    assert lo == pytest.approx(99.34, abs=5e-3)
    assert hi == pytest.approx(496.71, abs=5e-3)


@pytest.mark.parametrize(
    "delta, a, v, expected", [(0.0, 0.7, -1.0, 0.7), (0.1, 1.0, -1.0, 0.8), (0.5, 0.3, 0.3, 0.3)]
)
def test_mix_actions_examples(delta, a, v, expected):
    assert mix_actions(a, v, MixingConfig(delta)) == pytest.approx(expected, abs=1e-15)


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_mix_actions_limits(a, v):
    assert mix_actions(a, v, MixingConfig(0.0)) == a
    assert abs(mix_actions(a, v, MixingConfig(0.999)) - v) <= 1e-3 * abs(a - v) + 1e-15


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 0.999))
def test_mix_actions_is_convex_combination(a, v, delta):
    m = mix_actions(a, v, MixingConfig(delta))
    assert min(a, v) - 1e-15 <= m <= max(a, v) + 1e-15


def test_mix_actions_rejects_out_of_range_and_bad_delta():
    with pytest.raises(ValueError):
        mix_actions(1.5, 0.0, MixingConfig(0.1))
    with pytest.raises(ValueError):
        MixingConfig(1.0)
    with pytest.raises(ValueError):
        MixingConfig(-0.1)


def test_config_validation():
    for bad in (dict(rho=1.5), dict(state_lo=1, state_hi=0), dict(horizon=0), dict(discount=1.0), dict(init_state=11.0)):
        with pytest.raises(ValueError):
            ToyMdpConfig(**bad)
    assert ToyMdpConfig().with_rho(0.4).rho == 0.4


def test_step_deterministic_branch():
    cfg = ToyMdpConfig(rho=0.0)
    nxt, r, done = step(EnvState(3.0, 0), 0.5, cfg, make_rng(0))
    assert nxt == EnvState(3.5, 1) and r == reward(3.5) and not done


def test_step_clamps():
    cfg = ToyMdpConfig(rho=0.0)
    assert step(EnvState(9.8, 0), 1.0, cfg, make_rng(0))[0].s == 10.0
    assert step(EnvState(-9.5, 0), -1.0, cfg, make_rng(0))[0].s == -10.0


def test_step_noise_branch_is_uniform_increment():
    cfg = ToyMdpConfig(rho=1.0, horizon=10**6)
    rng = make_rng(1)
    inc = np.array([step(EnvState(0.0, 0), 0.9, cfg, rng)[0].s for _ in range(100_000)])
    assert abs(inc.mean()) < 0.01
    assert abs(inc.var() - 1 / 3) < 0.01


def test_step_variate_budget():
    # one uniform when the intended branch fires, two when the noise branch fires
    for rho, per_step in ((0.0, 1), (1.0, 2)):
        cfg = ToyMdpConfig(rho=rho)
        rng, ref = make_rng(2), make_rng(2)
        step(EnvState(0.0, 0), 0.2, cfg, rng)
        ref.random(per_step)
        assert rng.random() == ref.random()


def test_step_done_and_errors():
    cfg = ToyMdpConfig(rho=0.0, horizon=2)
    s1, _, d1 = step(EnvState(0.0, 0), 0.1, cfg, make_rng(0))
    s2, _, d2 = step(s1, 0.1, cfg, make_rng(0))
    assert (d1, d2) == (False, True)
    with pytest.raises(RuntimeError):
        step(s2, 0.1, cfg, make_rng(0))
    with pytest.raises(ValueError):
        step(EnvState(0.0, 0), 1.5, cfg, make_rng(0))


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=60), st.floats(0, 1), st.integers(0, 1000))
def test_state_stays_in_interval(actions, rho, seed):
    cfg = ToyMdpConfig(rho=rho, horizon=100)
    rng = make_rng(seed)
    st_ = reset(cfg, rng)
    for a in actions:
        st_, r, _ = step(st_, a, cfg, rng)
        assert -10.0 <= st_.s <= 10.0 and 1.0 <= r <= 5.0


@given(st.floats(-10, 10), st.floats(-1, 1), st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_transition_in_interval(s, a, u1, u2):
    assert -10.0 <= transition(s, a, u1, u2, ToyMdpConfig(rho=0.5)) <= 10.0


def test_reset_examples():
    cfg = ToyMdpConfig()
    st_ = reset(cfg, make_rng(3))
    assert -10 <= st_.s <= 10 and st_.t == 0
    assert reset(cfg, make_rng(3)) == st_
    rng = make_rng(4)
    assert abs(np.mean([reset(cfg, rng).s for _ in range(100_000)])) < 0.1
    assert reset(ToyMdpConfig(init_state=2.5), rng) == EnvState(2.5, 0)


def test_toy_env_wrapper():
    env = ToyEnv(ToyMdpConfig(rho=0.0, horizon=3, init_state=5.0), make_rng(0))
    assert_allclose(env.reset(), [0.5])
    obs, r, done = env.step(np.array([1.0]))
    assert_allclose(obs, [0.6]) and r == reward(6.0) and not done
    env.step([0.0])
    assert env.step([0.0])[2]
    assert_allclose(normalize_state(-10.0, ToyMdpConfig()), -1.0)


def test_box_muller_transform_and_budget():
    rng = make_rng(9)
    z = standard_normal(rng, 3)
    u = make_rng(9).random(6)
    expected = np.sqrt(-2 * np.log1p(-u[0::2])) * np.cos(2 * np.pi * u[1::2])
    assert_allclose(z, expected, rtol=0, atol=0)
    assert isinstance(standard_normal(make_rng(1)), float)
    assert standard_normal(make_rng(1), (2, 2)).shape == (2, 2)
    with pytest.raises(ValueError):
        make_rng(-1)


def test_box_muller_moments():
    z = standard_normal(make_rng(10), 400_000)
    assert abs(z.mean()) < 0.01 and abs(z.var() - 1) < 0.01
    assert abs(np.mean(z**4) - 3) < 0.05


def test_uniform_range():
    u = uniform(make_rng(11), -2.0, 3.0, 10_000)
    assert u.min() >= -2.0 and u.max() < 3.0 and abs(u.mean() - 0.5) < 0.05
