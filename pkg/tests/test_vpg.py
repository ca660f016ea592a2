import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from mixedne.envs import MixingConfig, ToyMdpConfig, reward
from mixedne.nn import init_mlp, mlp_backward, mlp_forward
from mixedne.rl.common import TwoPlayerPolicy
from mixedne.rl.vpg import VpgConfig, collect, vpg_gad_train, vpg_gradients, vpg_mixed_ne_ld_train
from mixedne.rng import make_rng


def make_policy(delta=0.1, std=0.3, seed=0, hidden=(8,)):
    rng = make_rng(seed)
    sizes = (1, *hidden, 1)
    return TwoPlayerPolicy(
        init_mlp(sizes, rng, "relu", "tanh"), init_mlp(sizes, rng, "relu", "tanh"), MixingConfig(delta), std
    )


SHORT = dict(horizon=20, total_steps=4, trajectories_per_step=2)


def test_zero_delta_gives_zero_adversary_gradient():
    pol = make_policy(delta=0.0)
    trajs = collect(pol, ToyMdpConfig(rho=0.2, horizon=20), 3, make_rng(1))
    g, g_adv = vpg_gradients(trajs, pol, VpgConfig(horizon=20))
    assert np.any(g != 0)
    assert_array_equal(g_adv, 0.0)


def test_gradient_matches_hand_computed_weights():
    pol = make_policy(delta=0.25)
    cfg = VpgConfig(discount=0.9, horizon=6)
    trajs = collect(pol, ToyMdpConfig(rho=0.3, horizon=6), 2, make_rng(2))
    g, g_adv = vpg_gradients(trajs, pol, cfg)
    exp_a = np.zeros_like(g)
    exp_v = np.zeros_like(g_adv)
    for tr in trajs:
        for t in range(len(tr)):
            G = sum(cfg.discount ** (k - t) * tr.rewards[k] for k in range(t, len(tr)))
            w = cfg.discount**t * G / pol.policy_std / len(trajs)
            x = np.array([[tr.obs[t]]])
            exp_a += mlp_backward(pol.agent_net, x, np.array([[0.75 * w * tr.agent_noise[t]]]))
            exp_v += mlp_backward(pol.adversary_net, x, np.array([[0.25 * w * tr.adversary_noise[t]]]))
    assert_allclose(g, exp_a, rtol=1e-10, atol=1e-12)
    assert_allclose(g_adv, exp_v, rtol=1e-10, atol=1e-12)


def test_zero_returns_give_zero_gradients():
    pol = make_policy()
    trajs = collect(pol, ToyMdpConfig(horizon=5), 2, make_rng(3))
    for tr in trajs:
        tr.rewards[:] = 0.0
    g, g_adv = vpg_gradients(trajs, pol, VpgConfig(horizon=5))
    assert_array_equal(g, 0.0)
    assert_array_equal(g_adv, 0.0)


def test_gradient_input_validation():
    with pytest.raises(ValueError):
        vpg_gradients([], make_policy(), VpgConfig())
    pol = make_policy(std=0.0)
    trajs = collect(pol, ToyMdpConfig(horizon=3), 1, make_rng(0))
    with pytest.raises(ValueError):
        vpg_gradients(trajs, pol, VpgConfig(horizon=3))
    with pytest.raises(ValueError):
        VpgConfig(damping=0.0)


def test_one_step_estimator_is_unbiased():
    # H = 1 from s0 = 0 with ρ = 0: J(μ) = E R(clamp(μ + σξ)). Compare the mean
    # estimator to dJ/dμ ∇μ(0), with dJ/dμ from Gauss-Hermite quadrature.
    pol = make_policy(delta=0.0, std=0.3, seed=4)
    env = ToyMdpConfig(rho=0.0, horizon=1, init_state=0.0)
    cfg = VpgConfig(horizon=1)
    n = 40_000
    trajs = collect(pol, env, n, make_rng(5))
    g, _ = vpg_gradients(trajs, pol, cfg)

    x, w = np.polynomial.hermite_e.hermegauss(200)
    w = w / w.sum()

    def J(mu):
        return float(np.sum(w * np.vectorize(reward)(np.clip(mu + 0.3 * x, -1, 1))))

    mu0 = float(mlp_forward(pol.agent_net, [0.0])[0])
    h = 1e-5
    dJ = (J(mu0 + h) - J(mu0 - h)) / (2 * h)
    grad_mu = mlp_backward(pol.agent_net, np.array([[0.0]]), np.array([[1.0]]))
    expected = dJ * grad_mu

    per_sample = np.array([tr.rewards[0] * tr.agent_noise[0] / 0.3 for tr in trajs])
    se = per_sample.std() / np.sqrt(n)
    scale = np.abs(grad_mu)
    assert np.all(np.abs(g - expected) <= 4.5 * se * scale + 1e-12)


def test_mixedneld_noise_free_single_inner_equals_gad():
    pol = make_policy(delta=0.1)
    env = ToyMdpConfig(rho=0.2)
    cfg = VpgConfig(sigma0=0.0, inner_steps=1, damping=1.0, **SHORT)
    mix, _ = vpg_mixed_ne_ld_train(env, pol, cfg, rng_seed=3)
    gad, _ = vpg_gad_train(env, pol, cfg, rng_seed=3)
    assert_array_equal(mix.agent_net.flat, gad.agent_net.flat)
    assert_array_equal(mix.adversary_net.flat, gad.adversary_net.flat)


def test_zero_delta_freezes_adversary_and_zero_lr_freezes_everything():
    pol = make_policy(delta=0.0)
    env = ToyMdpConfig(rho=0.2)
    for train in (vpg_mixed_ne_ld_train, vpg_gad_train):
        out, _ = train(env, pol, VpgConfig(inner_steps=2, **SHORT), rng_seed=1)
        assert_array_equal(out.adversary_net.flat, pol.adversary_net.flat)
        assert np.any(out.agent_net.flat != pol.agent_net.flat)
        frozen, _ = train(env, pol, VpgConfig(learning_rate=0.0, sigma0=0.0, **SHORT), rng_seed=1)
        # damped averaging of identical vectors can round by one ulp
        assert_allclose(frozen.agent_net.flat, pol.agent_net.flat, rtol=1e-15, atol=0)


def test_training_is_deterministic_and_does_not_mutate_input():
    pol = make_policy(delta=0.1)
    before = pol.agent_net.flat.copy()
    env = ToyMdpConfig(rho=0.2)
    cfg = VpgConfig(sigma0=1e-3, inner_steps=3, **SHORT)
    a, rec_a = vpg_mixed_ne_ld_train(env, pol, cfg, rng_seed=7)
    b, rec_b = vpg_mixed_ne_ld_train(env, pol, cfg, rng_seed=7)
    c, _ = vpg_mixed_ne_ld_train(env, pol, cfg, rng_seed=8)
    assert_array_equal(a.agent_net.flat, b.agent_net.flat)
    assert_array_equal(rec_a.column("episode_return"), rec_b.column("episode_return"))
    assert np.any(a.agent_net.flat != c.agent_net.flat)
    assert_array_equal(pol.agent_net.flat, before)
    assert len(rec_a.rows) == cfg.total_steps
    assert_array_equal(rec_a.column("K_t"), 3)


def test_training_horizon_overrides_env():
    pol = make_policy()
    _, rec = vpg_gad_train(ToyMdpConfig(horizon=500), pol, VpgConfig(horizon=3, total_steps=2, discount=0.5))
    assert np.all(rec.column("episode_return") <= 5 * 1.75 + 1e-12)
