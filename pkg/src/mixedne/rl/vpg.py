"""Two-player REINFORCE with MixedNE-LD or GAD updates, RMSProp-preconditioned."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..envs import ToyMdpConfig
from ..nn import RmsState, damped_average, mlp_backward, sgld_update
from ..rng import make_rng
from .common import RunRecord, TwoPlayerPolicy, discounted_return, returns_to_go, thermal_sigma
from .rollout import rollout


@dataclass(frozen=True)
class VpgConfig:
    discount: float = 0.99
    horizon: int = 500
    trajectories_per_step: int = 1
    rms_decay: float = 0.99
    rms_floor: float = 1e-8
    learning_rate: float = 1e-3
    damping: float = 0.9
    inner_steps: int = 1
    sigma0: float = 1e-5
    total_steps: int = 5000

    def __post_init__(self):
        if not 0.0 < self.discount <= 1.0 or self.horizon < 1:
            raise ValueError("bad discount or horizon")
        if self.trajectories_per_step < 1 or self.inner_steps < 1 or self.total_steps < 0:
            raise ValueError("counts must be positive")
        if self.learning_rate < 0 or self.sigma0 < 0 or not 0.0 < self.damping <= 1.0:
            raise ValueError("bad learning rate, sigma0 or damping")


def _streams(seed: int):
    """Independent generators for environment/policy sampling and Langevin noise."""
    env_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    return make_rng(env_ss.generate_state(1)[0]), make_rng(noise_ss.generate_state(1)[0])


def collect(policy: TwoPlayerPolicy, env_cfg: ToyMdpConfig, n: int, rng, horizon=None):
    return [
        rollout(policy.agent_net, policy.adversary_net, policy.delta, policy.policy_std, env_cfg, rng, horizon)
        for _ in range(n)
    ]


def vpg_gradients(trajs, policy: TwoPlayerPolicy, cfg: VpgConfig):
    """REINFORCE estimates ``(g_agent, g_adv)`` with γ^t G_t weights and (1-δ), δ scaling.

    The trajectories must come from ``policy`` itself. For the Gaussian policy
    ∇ log π(a|s) = (a_raw - μ(s)) / std² · ∇μ(s) = ξ / std · ∇μ(s), with ξ the
    stored standard normal behind the pre-clamp sample.
    """
    if not trajs:
        raise ValueError("empty trajectory set")
    std = policy.policy_std
    if std <= 0:
        raise ValueError("score-function gradients need policy_std > 0")
    delta = policy.delta
    x = np.concatenate([tr.obs for tr in trajs])[:, None]
    w = np.concatenate([cfg.discount ** np.arange(len(tr)) * returns_to_go(tr.rewards, cfg.discount) for tr in trajs])
    w /= len(trajs) * std

    xi_a = np.concatenate([tr.agent_noise for tr in trajs])
    g_agent = mlp_backward(policy.agent_net, x, ((1.0 - delta) * w * xi_a)[:, None])
    if delta == 0.0:
        g_adv = np.zeros(policy.adversary_net.n_params)
    else:
        xi_v = np.concatenate([tr.adversary_noise for tr in trajs])
        g_adv = mlp_backward(policy.adversary_net, x, (delta * w * xi_v)[:, None])
    return g_agent, g_adv


def _train_horizon(env_cfg: ToyMdpConfig, cfg: VpgConfig) -> ToyMdpConfig:
    return replace(env_cfg, horizon=cfg.horizon, discount=cfg.discount)


def vpg_mixed_ne_ld_train(env_cfg: ToyMdpConfig, policy: TwoPlayerPolicy, cfg: VpgConfig, rng_seed: int = 0):
    """Nested Langevin VPG: N_k inner SGLD steps per outer step, damped commits.

    Every inner step collects fresh trajectories under the current inner
    iterates of both players. With δ = 0 the adversary takes no part and is
    returned unchanged.
    """
    env_cfg = _train_horizon(env_cfg, cfg)
    env_rng, noise_rng = _streams(rng_seed)
    agent, adv = policy.agent_net.copy(), policy.adversary_net.copy()
    m = RmsState.zeros(agent.n_params, cfg.rms_decay, cfg.rms_floor)
    m_adv = RmsState.zeros(adv.n_params, cfg.rms_decay, cfg.rms_floor)
    delta, beta, eta = policy.delta, cfg.damping, cfg.learning_rate
    record = RunRecord(seed=rng_seed)
    for k in range(cfg.total_steps):
        sigma = thermal_sigma(cfg.sigma0, k)
        th_in, th_bar = agent, agent.flat
        w_in, w_bar = adv, adv.flat
        rets = []
        for _ in range(cfg.inner_steps):
            inner = TwoPlayerPolicy(th_in, w_in, policy.mixing, policy.policy_std)
            trajs = collect(inner, env_cfg, cfg.trajectories_per_step, env_rng)
            rets.extend(discounted_return(tr.rewards, cfg.discount) for tr in trajs)
            g, g_adv = vpg_gradients(trajs, inner, cfg)
            th_in = sgld_update(th_in, g, m, eta, sigma, "ascend", noise_rng)
            th_bar = damped_average(th_bar, th_in.flat, beta)
            if delta > 0:
                w_in = sgld_update(w_in, g_adv, m_adv, eta, sigma, "descend", noise_rng)
                w_bar = damped_average(w_bar, w_in.flat, beta)
        agent = agent.with_flat(damped_average(agent.flat, th_bar, beta))
        if delta > 0:
            adv = adv.with_flat(damped_average(adv.flat, w_bar, beta))
        record.log(k, np.mean(rets), sigma, cfg.inner_steps)
    return TwoPlayerPolicy(agent, adv, policy.mixing, policy.policy_std), record


def vpg_gad_train(env_cfg: ToyMdpConfig, policy: TwoPlayerPolicy, cfg: VpgConfig, rng_seed: int = 0):
    """Single-loop RMSProp ascent (agent) / descent (adversary) on REINFORCE estimates."""
    env_cfg = _train_horizon(env_cfg, cfg)
    env_rng, _ = _streams(rng_seed)
    agent, adv = policy.agent_net.copy(), policy.adversary_net.copy()
    m = RmsState.zeros(agent.n_params, cfg.rms_decay, cfg.rms_floor)
    m_adv = RmsState.zeros(adv.n_params, cfg.rms_decay, cfg.rms_floor)
    record = RunRecord(seed=rng_seed)
    for k in range(cfg.total_steps):
        current = TwoPlayerPolicy(agent, adv, policy.mixing, policy.policy_std)
        trajs = collect(current, env_cfg, cfg.trajectories_per_step, env_rng)
        g, g_adv = vpg_gradients(trajs, current, cfg)
        agent = sgld_update(agent, g, m, cfg.learning_rate, 0.0, "ascend")
        if policy.delta > 0:
            adv = sgld_update(adv, g_adv, m_adv, cfg.learning_rate, 0.0, "descend")
        record.log(k, np.mean([discounted_return(tr.rewards, cfg.discount) for tr in trajs]), 0.0, 1)
    return TwoPlayerPolicy(agent, adv, policy.mixing, policy.policy_std), record
