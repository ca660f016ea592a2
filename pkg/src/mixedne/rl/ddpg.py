"""Two-player DDPG whose actors are updated by MixedNE-LD or by RMSProp GAD.

Actors map the normalized state to a tanh-bounded action; the critic reads
``[state, mixed action]`` and has an identity head. Exploration adds
uncorrelated Gaussian noise of std ``action_noise`` to each player's action,
clamped to the action box before mixing. Updates start once the buffer holds
``batch_size`` transitions and then run one update block per environment step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..envs import MixingConfig, ToyEnv, ToyMdpConfig
from ..nn import (
    AdamState,
    MlpParams,
    RmsState,
    adam_update,
    backward_from_cache,
    damped_average,
    forward_with_cache,
    init_mlp,
    mlp_forward,
    sgld_update,
    soft_update,
)
from ..rng import make_rng, standard_normal
from .common import Batch, ReplayBuffer, RunRecord, Transition, TwoPlayerPolicy, thermal_sigma, warmup_steps


@dataclass(frozen=True)
class DdpgConfig:
    hidden: tuple = (64, 64)
    hidden_activation: str = "tanh"
    critic_lr: float = 1e-3
    soft_update: float = 0.999
    batch_size: int = 128
    discount: float = 0.99
    damping: float = 0.9
    buffer_size: int = 1_000_000
    action_noise: float = 0.1
    sigma0: float = 1e-3
    warmup_cap: int = 15
    # overrides K_t when set; single-player runs use 1
    fixed_warmup: int | None = None
    rms_decay: float = 0.999
    rms_floor: float = 1e-8
    actor_lr: float = 1e-4
    delta: float = 0.1
    total_steps: int = 20_000
    heldout_size: int = 512
    log_every: int = 500

    def __post_init__(self):
        if not 0.0 <= self.soft_update <= 1.0 or not 0.0 < self.damping <= 1.0:
            raise ValueError("soft_update must lie in [0, 1] and damping in (0, 1]")
        if self.batch_size < 1 or self.buffer_size < self.batch_size:
            raise ValueError("buffer must hold at least one batch")
        if self.fixed_warmup is not None and self.fixed_warmup < 1:
            raise ValueError("fixed_warmup must be >= 1")
        MixingConfig(self.delta)

    def k_at(self, t: int) -> int:
        return self.fixed_warmup if self.fixed_warmup is not None else warmup_steps(t, self.warmup_cap)


@dataclass
class DdpgNets:
    policy: TwoPlayerPolicy
    critic: MlpParams


def init_nets(cfg: DdpgConfig, state_dim: int, action_dim: int, rng) -> DdpgNets:
    sizes = (state_dim, *cfg.hidden, action_dim)
    agent = init_mlp(sizes, rng, cfg.hidden_activation, "tanh")
    adv = init_mlp(sizes, rng, cfg.hidden_activation, "tanh")
    critic = init_mlp((state_dim + action_dim, *cfg.hidden, 1), rng, cfg.hidden_activation, "identity")
    return DdpgNets(TwoPlayerPolicy(agent, adv, MixingConfig(cfg.delta), 0.0), critic)


def _mixed(policy: TwoPlayerPolicy, s, agent=None, adv=None):
    agent = policy.agent_net if agent is None else agent
    adv = policy.adversary_net if adv is None else adv
    d = policy.delta
    out = (1.0 - d) * mlp_forward(agent, s)
    if d > 0:
        out = out + d * mlp_forward(adv, s)
    return out


def ddpg_td_target(batch: Batch, critic_targ: MlpParams, policy_targ: TwoPlayerPolicy, gamma: float) -> np.ndarray:
    """y = r + γ (1 - d) Q_targ(s', (1-δ) μ_targ(s') + δ ν_targ(s'))."""
    if len(batch.r) == 0:
        raise ValueError("empty batch")
    a_next = _mixed(policy_targ, batch.s_next)
    q_next = mlp_forward(critic_targ, np.hstack([batch.s_next, a_next]))[:, 0]
    return batch.r + gamma * (1.0 - batch.done) * q_next


def critic_loss(critic: MlpParams, batch: Batch, y) -> float:
    q = mlp_forward(critic, np.hstack([batch.s, batch.a_bar]))[:, 0]
    return float(np.mean((y - q) ** 2))


def critic_grad(critic: MlpParams, batch: Batch, y):
    """Gradient of mean((y - Q(s, ā))²) w.r.t. critic parameters; also returns the loss."""
    q, cache = forward_with_cache(critic, np.hstack([batch.s, batch.a_bar]))
    err = q[:, 0] - y
    g, _ = backward_from_cache(critic, cache, (2.0 / len(y) * err)[:, None])
    return g, float(np.mean(err**2))


def _dq_da(critic: MlpParams, s, a_bar):
    _, cache = forward_with_cache(critic, np.hstack([s, a_bar]))
    _, gx = backward_from_cache(critic, cache, np.ones((len(s), 1)), need_params=False)
    return gx[:, s.shape[1]:]


def agent_gradient(batch_s, critic, agent: MlpParams, adv_frozen: MlpParams, delta: float):
    """(1-δ)/N Σ ∇θ μθ(s) ∇ā Q(s, ā) at ā = (1-δ) μθ(s) + δ ν(s)."""
    n = len(batch_s)
    mu, cache = forward_with_cache(agent, batch_s)
    a_bar = (1.0 - delta) * mu
    if delta > 0:
        a_bar = a_bar + delta * mlp_forward(adv_frozen, batch_s)
    dq = _dq_da(critic, batch_s, a_bar)
    g, _ = backward_from_cache(agent, cache, (1.0 - delta) / n * dq)
    return g


def adversary_gradient(batch_s, critic, agent_frozen: MlpParams, adv: MlpParams, delta: float):
    """δ/N Σ ∇ω νω(s) ∇ā Q(s, ā) at ā = (1-δ) μ(s) + δ νω(s)."""
    if delta == 0:
        return np.zeros(adv.n_params)
    n = len(batch_s)
    nu, cache = forward_with_cache(adv, batch_s)
    a_bar = (1.0 - delta) * mlp_forward(agent_frozen, batch_s) + delta * nu
    dq = _dq_da(critic, batch_s, a_bar)
    g, _ = backward_from_cache(adv, cache, delta / n * dq)
    return g


def ddpg_actor_gradients(batch: Batch, critic: MlpParams, policy: TwoPlayerPolicy):
    """Deterministic policy gradients ``(g_agent, g_adv)`` through a frozen critic."""
    if len(batch.s) == 0:
        raise ValueError("empty batch")
    return _joint_gradients(batch.s, critic, policy.agent_net, policy.adversary_net, policy.delta)


def _joint_gradients(batch_s, critic, agent: MlpParams, adv: MlpParams, delta: float):
    # both players evaluated at the same ā: one critic pass serves both
    n = len(batch_s)
    mu, a_cache = forward_with_cache(agent, batch_s)
    if delta == 0:
        dq = _dq_da(critic, batch_s, mu)
        g, _ = backward_from_cache(agent, a_cache, dq / n)
        return g, np.zeros(adv.n_params)
    nu, v_cache = forward_with_cache(adv, batch_s)
    dq = _dq_da(critic, batch_s, (1.0 - delta) * mu + delta * nu)
    g, _ = backward_from_cache(agent, a_cache, (1.0 - delta) / n * dq)
    g_adv, _ = backward_from_cache(adv, v_cache, delta / n * dq)
    return g, g_adv


class _Trainer:
    """Shared environment loop; subclasses implement one update block."""

    def __init__(self, env_cfg: ToyMdpConfig, cfg: DdpgConfig, rng_seed: int, nets: DdpgNets | None = None):
        self.cfg = cfg
        self.env_cfg = env_cfg
        init_ss, env_ss, act_ss, batch_ss, noise_ss, held_ss = np.random.SeedSequence(rng_seed).spawn(6)
        seed_of = lambda ss: make_rng(ss.generate_state(1)[0])
        self.env = ToyEnv(env_cfg, seed_of(env_ss))
        self.act_rng = seed_of(act_ss)
        self.batch_rng = seed_of(batch_ss)
        self.noise_rng = seed_of(noise_ss)
        if nets is None:
            nets = init_nets(cfg, self.env.state_dim, self.env.action_dim, seed_of(init_ss))
        self.agent = nets.policy.agent_net.copy()
        self.adv = nets.policy.adversary_net.copy()
        self.critic = nets.critic.copy()
        self.agent_targ = self.agent.copy()
        self.adv_targ = self.adv.copy()
        self.critic_targ = self.critic.copy()
        self.mixing = MixingConfig(cfg.delta)
        n_a, n_v = self.agent.n_params, self.adv.n_params
        self.m = RmsState.zeros(n_a, cfg.rms_decay, cfg.rms_floor)
        self.m_adv = RmsState.zeros(n_v, cfg.rms_decay, cfg.rms_floor)
        self.adam = AdamState.zeros(self.critic.n_params, learning_rate=cfg.critic_lr)
        self.buffer = ReplayBuffer(cfg.buffer_size, self.env.state_dim, self.env.action_dim)
        self.t = 1  # update counter, drives σ_t and K_t
        self.heldout = self._heldout_batch(seed_of(held_ss))
        self.record = RunRecord(seed=rng_seed)

    def _heldout_batch(self, rng) -> Batch:
        """Fixed evaluation batch of transitions under uniformly random mixed actions."""
        env = ToyEnv(self.env_cfg, rng)
        s = env.reset()
        rows = []
        for _ in range(self.cfg.heldout_size):
            a = rng.uniform(self.env_cfg.action_lo, self.env_cfg.action_hi, size=1)
            s2, r, done = env.step(a)
            rows.append((s, a, r, s2, float(done)))
            s = env.reset() if done else s2
        s, a, r, s2, d = (np.array(c) for c in zip(*rows))
        return Batch(s, a, r, s2, d)

    @property
    def policy(self) -> TwoPlayerPolicy:
        return TwoPlayerPolicy(self.agent, self.adv, self.mixing, 0.0)

    @property
    def target_policy(self) -> TwoPlayerPolicy:
        return TwoPlayerPolicy(self.agent_targ, self.adv_targ, self.mixing, 0.0)

    def heldout_loss(self) -> float:
        y = ddpg_td_target(self.heldout, self.critic_targ, self.target_policy, self.cfg.discount)
        return critic_loss(self.critic, self.heldout, y)

    def explore(self, s) -> np.ndarray:
        lo, hi = self.env.action_low, self.env.action_high
        sig = self.cfg.action_noise
        a = mlp_forward(self.agent, s)
        if sig > 0:
            a = a + sig * standard_normal(self.act_rng, a.shape)
        a = np.clip(a, lo, hi)
        if self.cfg.delta > 0:
            v = mlp_forward(self.adv, s)
            if sig > 0:
                v = v + sig * standard_normal(self.act_rng, v.shape)
            v = np.clip(v, lo, hi)
        else:
            v = np.zeros_like(a)
        return np.asarray(self.mixing.delta * v + (1.0 - self.mixing.delta) * a)

    def critic_step(self, batch: Batch) -> float:
        y = ddpg_td_target(batch, self.critic_targ, self.target_policy, self.cfg.discount)
        g, loss = critic_grad(self.critic, batch, y)
        self.critic = adam_update(self.critic, g, self.adam)
        return loss

    def soft_targets(self, agent: MlpParams, adv: MlpParams):
        tau = self.cfg.soft_update
        self.critic_targ = self.critic_targ.with_flat(soft_update(self.critic_targ.flat, self.critic.flat, tau))
        self.agent_targ = self.agent_targ.with_flat(soft_update(self.agent_targ.flat, agent.flat, tau))
        if self.cfg.delta > 0:
            self.adv_targ = self.adv_targ.with_flat(soft_update(self.adv_targ.flat, adv.flat, tau))

    def update(self):
        raise NotImplementedError

    def sigma_t(self) -> float:
        return 0.0

    def run(self):
        cfg = self.cfg
        s = self.env.reset()
        ep_rewards = []
        self.record.log(0, np.nan, self.sigma_t(), cfg.k_at(self.t), self.heldout_loss())
        for step in range(1, cfg.total_steps + 1):
            a_bar = self.explore(s)
            s2, r, done = self.env.step(a_bar)
            self.buffer.add(Transition(s, a_bar, r, s2, done))
            ep_rewards.append(r)
            s = s2
            if done:
                s = self.env.reset()
            if len(self.buffer) >= cfg.batch_size:
                self.update()
            if done:
                ret = float(np.dot(cfg.discount ** np.arange(len(ep_rewards)), ep_rewards))
                self.record.log(step, ret, self.sigma_t(), cfg.k_at(self.t), self.heldout_loss())
                ep_rewards = []
        return DdpgNets(self.policy, self.critic), self.record


class MixedNeLdTrainer(_Trainer):
    def sigma_t(self) -> float:
        return thermal_sigma(self.cfg.sigma0, self.t)

    def update(self):
        cfg = self.cfg
        delta, beta, eta = cfg.delta, cfg.damping, cfg.actor_lr
        sigma = self.sigma_t()
        th_in, th_bar = self.agent, self.agent.flat
        w_in, w_bar = self.adv, self.adv.flat
        for _ in range(cfg.k_at(self.t)):
            batch = self.buffer.sample(cfg.batch_size, self.batch_rng)
            self.critic_step(batch)
            if th_in is self.agent and w_in is self.adv:
                g, g_adv = _joint_gradients(batch.s, self.critic, th_in, w_in, delta)
            else:
                g = agent_gradient(batch.s, self.critic, th_in, self.adv, delta)
                g_adv = None
            th_in = sgld_update(th_in, g, self.m, eta, sigma, "ascend", self.noise_rng)
            if delta > 0:
                if g_adv is None:
                    g_adv = adversary_gradient(batch.s, self.critic, self.agent, w_in, delta)
                w_in = sgld_update(w_in, g_adv, self.m_adv, eta, sigma, "descend", self.noise_rng)
                w_bar = damped_average(w_bar, w_in.flat, beta)
            th_bar = damped_average(th_bar, th_in.flat, beta)
            self.soft_targets(th_in, w_in)
        self.agent = self.agent.with_flat(damped_average(self.agent.flat, th_bar, beta))
        if delta > 0:
            self.adv = self.adv.with_flat(damped_average(self.adv.flat, w_bar, beta))
        self.t += 1


class GadTrainer(_Trainer):
    def update(self):
        cfg = self.cfg
        batch = self.buffer.sample(cfg.batch_size, self.batch_rng)
        self.critic_step(batch)
        g = agent_gradient(batch.s, self.critic, self.agent, self.adv, cfg.delta)
        self.agent = sgld_update(self.agent, g, self.m, cfg.actor_lr, 0.0, "ascend")
        if cfg.delta > 0:
            # sequential convention: the adversary sees the freshly updated agent
            g_adv = adversary_gradient(batch.s, self.critic, self.agent, self.adv, cfg.delta)
            self.adv = sgld_update(self.adv, g_adv, self.m_adv, cfg.actor_lr, 0.0, "descend")
        self.soft_targets(self.agent, self.adv)
        self.t += 1


def ddpg_mixed_ne_ld_train(env_cfg: ToyMdpConfig, cfg: DdpgConfig, rng_seed: int = 0, nets: DdpgNets | None = None):
    """Two-player DDPG with MixedNE-LD actors; returns ``(TwoPlayerPolicy, RunRecord)``.

    Inside each update block, K_t inner iterations each take one critic Adam
    step, one SGLD ascent step for the agent against the adversary frozen at
    its outer value, one SGLD descent step for the adversary against the
    frozen agent, damped running-average updates and a soft target update.
    The block ends with the damped outer commit. Use :class:`MixedNeLdTrainer`
    directly to also get the trained critic.
    """
    trained, record = MixedNeLdTrainer(env_cfg, cfg, rng_seed, nets).run()
    return trained.policy, record


def ddpg_gad_train(env_cfg: ToyMdpConfig, cfg: DdpgConfig, rng_seed: int = 0, nets: DdpgNets | None = None):
    """Two-player DDPG with one critic step and one RMSProp actor/adversary step per update."""
    trained, record = GadTrainer(env_cfg, cfg, rng_seed, nets).run()
    return trained.policy, record
