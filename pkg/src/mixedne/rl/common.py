from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.signal import lfilter

from ..envs import MixingConfig
from ..nn import MlpParams, mlp_forward
from ..rng import standard_normal


@dataclass
class TwoPlayerPolicy:
    agent_net: MlpParams
    adversary_net: MlpParams
    mixing: MixingConfig = field(default_factory=MixingConfig)
    policy_std: float = 0.3

    def __post_init__(self):
        a, b = self.agent_net.layer_sizes, self.adversary_net.layer_sizes
        if a[0] != b[0] or a[-1] != b[-1]:
            raise ValueError("agent and adversary must share state and action dimensions")
        if self.policy_std < 0:
            raise ValueError("policy_std must be >= 0")

    @property
    def delta(self) -> float:
        return self.mixing.delta

    def copy(self) -> "TwoPlayerPolicy":
        return TwoPlayerPolicy(self.agent_net.copy(), self.adversary_net.copy(), self.mixing, self.policy_std)


class ActionSample(NamedTuple):
    action: float
    mean: float
    pre_clamp: float
    noise: float


def sample_action(net: MlpParams, s, std: float, rng=None, lo: float = -1.0, hi: float = 1.0) -> ActionSample:
    """Gaussian action around the network mean, clamped to the action box.

    The log-density gradient is that of the pre-clamp Gaussian, so callers
    keep ``pre_clamp`` (or ``noise``) and treat the clamp as part of the
    environment. No variate is drawn when ``std == 0``.
    """
    if std < 0:
        raise ValueError("std must be >= 0")
    mean = float(np.asarray(mlp_forward(net, np.atleast_1d(s))).reshape(-1)[0])
    xi = standard_normal(rng) if std > 0 else 0.0
    raw = mean + std * xi
    return ActionSample(min(hi, max(lo, raw)), mean, raw, xi)


def returns_to_go(rewards, gamma: float) -> np.ndarray:
    """G_t = r_t + γ G_{t+1} with G_T = r_T, by reverse accumulation."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    r = np.asarray(rewards, dtype=float)
    return lfilter([1.0], [1.0, -gamma], r[::-1])[::-1].copy()


def discounted_return(rewards, gamma: float) -> float:
    r = np.asarray(rewards, dtype=float)
    return float(np.dot(gamma ** np.arange(r.size), r))


@dataclass
class Trajectory:
    """One episode. ``*_noise`` hold the standard normals behind each sampled action."""

    states: np.ndarray
    agent_actions: np.ndarray
    adversary_actions: np.ndarray
    mixed_actions: np.ndarray
    rewards: np.ndarray
    agent_noise: np.ndarray
    adversary_noise: np.ndarray
    obs: np.ndarray  # normalized states fed to the networks

    def __len__(self):
        return len(self.rewards)


@dataclass
class Transition:
    s: np.ndarray
    a_bar: np.ndarray
    r: float
    s_next: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring buffer over array storage; oldest entries are evicted first."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros((capacity, action_dim))
        self.r = np.zeros(capacity)
        self.s2 = np.zeros((capacity, state_dim))
        self.d = np.zeros(capacity)
        self.size = 0
        self._next = 0

    def __len__(self):
        return self.size

    def add(self, tr: Transition):
        i = self._next
        self.s[i] = tr.s
        self.a[i] = tr.a_bar
        self.r[i] = tr.r
        self.s2[i] = tr.s_next
        self.d[i] = float(tr.done)
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def indices_oldest_first(self) -> np.ndarray:
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.capacity) + self._next) % self.capacity

    def transitions(self) -> list[Transition]:
        return [self[i] for i in self.indices_oldest_first()]

    def __getitem__(self, i) -> Transition:
        return Transition(self.s[i].copy(), self.a[i].copy(), float(self.r[i]), self.s2[i].copy(), bool(self.d[i]))

    def sample(self, n: int, rng: np.random.Generator) -> "Batch":
        idx = rng.integers(0, self.size, size=n)
        return Batch(self.s[idx], self.a[idx], self.r[idx], self.s2[idx], self.d[idx])


class Batch(NamedTuple):
    s: np.ndarray
    a_bar: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    done: np.ndarray


def thermal_sigma(sigma0: float, t: int) -> float:
    """σ_t = σ0 (1 - 5e-5)^t."""
    return sigma0 * (1.0 - 5e-5) ** t


def warmup_steps(t: int, cap: int = 15) -> int:
    """K_t = min(cap, floor((1 + 1e-5)^t))."""
    return min(cap, int(math.floor((1.0 + 1e-5) ** t)))


RUN_RECORD_COLUMNS = ("step", "episode_return", "critic_loss", "sigma_t", "K_t")


@dataclass
class RunRecord:
    """Per-step training trace. ``critic_loss`` is NaN for VPG rows."""

    rows: list = field(default_factory=list)
    seed: int = 0

    def log(self, step, episode_return, sigma_t, k_t, critic_loss: Optional[float] = None):
        self.rows.append((int(step), float(episode_return), math.nan if critic_loss is None else float(critic_loss), float(sigma_t), int(k_t)))

    def column(self, name: str) -> np.ndarray:
        j = RUN_RECORD_COLUMNS.index(name)
        return np.array([row[j] for row in self.rows], dtype=float)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RUN_RECORD_COLUMNS)
            for step, ret, loss, sig, k in self.rows:
                w.writerow([step, repr(ret), "" if math.isnan(loss) else repr(loss), repr(sig), k])
