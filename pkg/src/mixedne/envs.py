"""The ρ-parametrized noisy-transition toy MDP and NR-MDP action mixing.

States live in [-10, 10] and actions in [-1, 1]. With probability 1 - ρ the
intended increment is applied; with probability ρ it is replaced by a draw
from unif([-1, 1]). The next state is clamped into the state interval and the
reward is that of the state reached.

Random-variate budget of :func:`step`: one uniform picks the branch, and a
second uniform is drawn only when the noise branch fires.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .rng import uniform

SQRT_1_7 = math.sqrt(1.7)
SQRT_0_3 = math.sqrt(0.3)


@dataclass(frozen=True)
class ToyMdpConfig:
    rho: float = 0.2
    state_lo: float = -10.0
    state_hi: float = 10.0
    action_lo: float = -1.0
    action_hi: float = 1.0
    horizon: int = 500
    discount: float = 0.99
    # None draws s0 uniformly from the state interval
    init_state: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho={self.rho} outside [0, 1]")
        if not (self.state_lo < self.state_hi and self.action_lo < self.action_hi):
            raise ValueError("empty state or action interval")
        if self.horizon < 1 or not 0.0 < self.discount < 1.0:
            raise ValueError("need horizon >= 1 and discount in (0, 1)")
        if self.init_state is not None and not self.state_lo <= self.init_state <= self.state_hi:
            raise ValueError("init_state outside the state interval")

    def with_rho(self, rho: float) -> "ToyMdpConfig":
        return replace(self, rho=rho)

    @property
    def state_scale(self) -> float:
        return max(abs(self.state_lo), abs(self.state_hi))

    def return_bounds(self) -> tuple[float, float]:
        """Range of any horizon-length discounted return, from R ∈ [1, 5]."""
        g = (1.0 - self.discount**self.horizon) / (1.0 - self.discount)
        return 1.0 * g, 5.0 * g


@dataclass(frozen=True)
class EnvState:
    s: float
    t: int = 0


@dataclass(frozen=True)
class MixingConfig:
    delta: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta={self.delta} outside [0, 1)")


def reward(s):
    return np.sin(SQRT_1_7 * s) + np.cos(SQRT_0_3 * s) + 3.0


def mix_actions(a, a_adv, cfg: MixingConfig, lo: float = -1.0, hi: float = 1.0):
    a = np.asarray(a, dtype=float)
    a_adv = np.asarray(a_adv, dtype=float)
    for x in (a, a_adv):
        if np.any(x < lo) or np.any(x > hi):
            raise ValueError(f"action outside [{lo}, {hi}]")
    out = (1.0 - cfg.delta) * a + cfg.delta * a_adv
    return float(out) if out.ndim == 0 else out


def normalize_state(s, cfg: ToyMdpConfig):
    """Policy/critic input encoding: s / 10, in [-1, 1] for the default interval."""
    return np.asarray(s, dtype=float) / cfg.state_scale


def transition(s: float, a_bar: float, u_branch: float, u_noise: float, cfg: ToyMdpConfig) -> float:
    """Deterministic core of a step given its two uniforms in [0, 1)."""
    if u_branch < cfg.rho:
        inc = cfg.action_lo + (cfg.action_hi - cfg.action_lo) * u_noise
    else:
        inc = a_bar
    return min(cfg.state_hi, max(cfg.state_lo, s + inc))


def step(state: EnvState, a_bar: float, cfg: ToyMdpConfig, rng: np.random.Generator):
    """Advance one step; returns ``(next_state, reward, done)``."""
    if state.t >= cfg.horizon:
        raise RuntimeError("episode already finished; call reset()")
    if not cfg.action_lo <= a_bar <= cfg.action_hi:
        raise ValueError(f"action {a_bar} outside [{cfg.action_lo}, {cfg.action_hi}]")
    u_branch = rng.random()
    u_noise = rng.random() if u_branch < cfg.rho else 0.0
    s_next = transition(state.s, a_bar, u_branch, u_noise, cfg)
    nxt = EnvState(s_next, state.t + 1)
    return nxt, float(reward(s_next)), nxt.t == cfg.horizon


def reset(cfg: ToyMdpConfig, rng: np.random.Generator) -> EnvState:
    """Start an episode; uniform s0 unless the config pins ``init_state``.

    A fixed start consumes no variates.
    """
    if cfg.init_state is not None:
        return EnvState(float(cfg.init_state), 0)
    return EnvState(float(uniform(rng, cfg.state_lo, cfg.state_hi)), 0)


class ToyEnv:
    """Vector-valued reset/step wrapper owning its generator.

    Observations are the normalized state as a length-1 array; actions are
    length-1 arrays already mixed by the caller.
    """

    state_dim = 1
    action_dim = 1

    def __init__(self, cfg: ToyMdpConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.action_low = np.array([cfg.action_lo])
        self.action_high = np.array([cfg.action_hi])
        self.state: Optional[EnvState] = None

    def reset(self) -> np.ndarray:
        self.state = reset(self.cfg, self.rng)
        return self.observe()

    def observe(self) -> np.ndarray:
        return np.array([self.state.s / self.cfg.state_scale])

    def step(self, action):
        self.state, r, done = step(self.state, float(np.asarray(action).reshape(-1)[0]), self.cfg, self.rng)
        return self.observe(), r, done
