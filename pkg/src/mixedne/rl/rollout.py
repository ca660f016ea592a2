"""Compiled episode rollouts on the toy MDP.

An episode of length H consumes, in this order from the caller's generator:
H normals for the agent, H normals for the adversary (skipped when δ = 0),
then H branch uniforms and H increment uniforms for the environment. Normals
come from :func:`mixedne.rng.standard_normal`. Pre-drawing both environment
uniforms makes the stream layout independent of which branch fires; the
kernel applies exactly :func:`mixedne.envs.transition` at every step.
"""
from __future__ import annotations

import numba
import numpy as np

from ..envs import ToyMdpConfig, reset
from ..nn import MlpParams
from ..rng import standard_normal
from .common import Trajectory

_ACT_CODE = {"identity": 0, "tanh": 1, "relu": 2}


def net_spec(net: MlpParams):
    return (
        net.flat,
        np.asarray(net.layer_sizes, dtype=np.int64),
        _ACT_CODE[net.hidden_activation],
        _ACT_CODE[net.output_activation],
    )


@numba.njit(cache=True)
def _forward1(flat, sizes, hid, out, x):
    """Scalar-in, scalar-out forward pass over a flat parameter vector."""
    n_layers = sizes.shape[0] - 1
    width = 1
    for i in range(sizes.shape[0]):
        if sizes[i] > width:
            width = sizes[i]
    h = np.zeros(width)
    nxt = np.zeros(width)
    h[0] = x
    off = 0
    for layer in range(n_layers):
        n_in = sizes[layer]
        n_out = sizes[layer + 1]
        code = out if layer == n_layers - 1 else hid
        boff = off + n_out * n_in
        for j in range(n_out):
            z = 0.0
            row = off + j * n_in
            for k in range(n_in):
                z += flat[row + k] * h[k]
            z += flat[boff + j]
            if code == 1:
                z = np.tanh(z)
            elif code == 2:
                z = z if z > 0.0 else 0.0
            nxt[j] = z
        for j in range(n_out):
            h[j] = nxt[j]
        off = boff + n_out
    return h[0]


@numba.njit(cache=True)
def _rollout(
    a_flat, a_sizes, a_hid, a_out,
    v_flat, v_sizes, v_hid, v_out,
    s0, std, delta, xi_a, xi_v, u_branch, u_noise,
    rho, s_lo, s_hi, a_lo, a_hi, scale,
    states, obs, act_a, act_v, act_bar, rewards,
):
    s = s0
    H = rewards.shape[0]
    sq17 = np.sqrt(1.7)
    sq03 = np.sqrt(0.3)
    for t in range(H):
        o = s / scale
        states[t] = s
        obs[t] = o
        a = _forward1(a_flat, a_sizes, a_hid, a_out, o) + std * xi_a[t]
        a = min(a_hi, max(a_lo, a))
        if delta > 0.0:
            v = _forward1(v_flat, v_sizes, v_hid, v_out, o) + std * xi_v[t]
            v = min(a_hi, max(a_lo, v))
        else:
            v = 0.0
        ab = (1.0 - delta) * a + delta * v
        act_a[t] = a
        act_v[t] = v
        act_bar[t] = ab
        if u_branch[t] < rho:
            inc = a_lo + (a_hi - a_lo) * u_noise[t]
        else:
            inc = ab
        s = min(s_hi, max(s_lo, s + inc))
        rewards[t] = np.sin(sq17 * s) + np.cos(sq03 * s) + 3.0


def rollout(agent: MlpParams, adversary: MlpParams, delta: float, std: float, cfg: ToyMdpConfig, rng: np.random.Generator, horizon: int | None = None) -> Trajectory:
    """Play one episode of the mixed policy; see the module docstring for the variate order.

    With ``δ = 0`` the adversary is not evaluated and its actions are logged
    as 0. With ``std = 0`` no policy normals are drawn.
    """
    H = cfg.horizon if horizon is None else horizon
    s0 = reset(cfg, rng).s
    xi_a = standard_normal(rng, H) if std > 0 else np.zeros(H)
    xi_v = standard_normal(rng, H) if (std > 0 and delta > 0) else np.zeros(H)
    u_branch = rng.random(H)
    u_noise = rng.random(H)
    states = np.empty(H)
    obs = np.empty(H)
    act_a = np.empty(H)
    act_v = np.empty(H)
    act_bar = np.empty(H)
    rewards = np.empty(H)
    _rollout(
        *net_spec(agent), *net_spec(adversary),
        float(s0), float(std), float(delta), xi_a, xi_v, u_branch, u_noise,
        cfg.rho, cfg.state_lo, cfg.state_hi, cfg.action_lo, cfg.action_hi, cfg.state_scale,
        states, obs, act_a, act_v, act_bar, rewards,
    )
    return Trajectory(states, act_a, act_v, act_bar, rewards, xi_a, xi_v, obs)
