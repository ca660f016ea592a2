"""Small feedforward networks with exact backprop and three update rules.

Parameters live in one flat float64 vector. Layout is layer-major, and within
a layer the weight matrix (shape ``(out, in)``, row-major) precedes the bias.
Optimizer moments and Langevin noise share that layout.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import standard_normal

ACTIVATIONS = ("tanh", "relu", "identity")
FlatGrad = np.ndarray


def _act(name, z):
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    return z


def _act_grad(name, z, a):
    """Derivative of the activation given pre-activation z and output a."""
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        # derivative at exactly 0 is 0
        return (z > 0.0).astype(float)
    return np.ones_like(z)


@dataclass
class MlpParams:
    layer_sizes: tuple
    hidden_activation: str = "tanh"
    output_activation: str = "identity"
    flat: np.ndarray = None

    def __post_init__(self):
        self.layer_sizes = tuple(int(n) for n in self.layer_sizes)
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise ValueError(f"bad layer sizes {self.layer_sizes}")
        for a in (self.hidden_activation, self.output_activation):
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
        if self.flat is None:
            self.flat = np.zeros(self.n_params)
        self.flat = np.asarray(self.flat, dtype=float)
        if self.flat.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {self.flat.shape}")

    @property
    def n_params(self) -> int:
        s = self.layer_sizes
        return sum(s[i + 1] * s[i] + s[i + 1] for i in range(len(s) - 1))

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def activation(self, layer: int) -> str:
        return self.output_activation if layer == self.n_layers - 1 else self.hidden_activation

    def slices(self):
        """Yield ``(weight_slice, bias_slice, (out, in))`` per layer."""
        off = 0
        s = self.layer_sizes
        for i in range(self.n_layers):
            n_in, n_out = s[i], s[i + 1]
            w = slice(off, off + n_out * n_in)
            off += n_out * n_in
            b = slice(off, off + n_out)
            off += n_out
            yield w, b, (n_out, n_in)

    def weights(self):
        """Per-layer ``(W, b)`` views into ``flat``, cached until ``flat`` is rebound."""
        cached = self.__dict__.get("_views")
        if cached is None or cached[0] is not self.flat:
            views = [(self.flat[w].reshape(shape), self.flat[b]) for w, b, shape in self.slices()]
            cached = (self.flat, views)
            self.__dict__["_views"] = cached
        return cached[1]

    def with_flat(self, flat) -> "MlpParams":
        return MlpParams(self.layer_sizes, self.hidden_activation, self.output_activation, np.array(flat, dtype=float))

    def copy(self) -> "MlpParams":
        return self.with_flat(self.flat.copy())


def init_mlp(layer_sizes, rng, hidden_activation="tanh", output_activation="identity", out_scale=1.0) -> MlpParams:
    """Gaussian init with std 1/sqrt(fan_in), zero biases; last layer scaled by ``out_scale``."""
    params = MlpParams(layer_sizes, hidden_activation, output_activation)
    flat = np.zeros(params.n_params)
    for i, (w, b, (n_out, n_in)) in enumerate(params.slices()):
        scale = 1.0 / math.sqrt(n_in)
        if i == params.n_layers - 1:
            scale *= out_scale
        flat[w] = scale * standard_normal(rng, n_out * n_in)
    params.flat = flat
    return params


def _check_input(params, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.ndim != 2 or xb.shape[1] != params.layer_sizes[0]:
        raise ValueError(f"input shape {x.shape} does not match layer size {params.layer_sizes[0]}")
    return xb, single


def _forward_cache(params, xb):
    acts = [xb]
    pres = []
    h = xb
    for i, (w, b) in enumerate(params.weights()):
        z = h @ w.T
        z += b
        h = _act(params.activation(i), z)
        pres.append(z)
        acts.append(h)
    return pres, acts


def mlp_forward(params: MlpParams, x) -> np.ndarray:
    """Evaluate the network on one input vector or a batch of rows."""
    xb, single = _check_input(params, x)
    _, acts = _forward_cache(params, xb)
    out = acts[-1]
    return out[0] if single else out


def forward_with_cache(params: MlpParams, x):
    """Batch forward pass that also returns what :func:`backward_from_cache` needs."""
    xb, _ = _check_input(params, x)
    pres, acts = _forward_cache(params, xb)
    return acts[-1], (pres, acts)


def backward_from_cache(params: MlpParams, cache, upstream, need_params: bool = True):
    """Reverse pass over a cached batch forward; returns ``(param_grad, input_grad)``.

    ``param_grad`` is None when ``need_params`` is false.
    """
    pres, acts = cache
    ub = np.asarray(upstream, dtype=float)
    if ub.shape != acts[-1].shape:
        raise ValueError(f"upstream shape {ub.shape} does not match output {acts[-1].shape}")
    g = np.empty(params.n_params) if need_params else None
    ws = params.weights()
    slices = list(params.slices())
    delta = ub
    for i in reversed(range(params.n_layers)):
        delta = delta * _act_grad(params.activation(i), pres[i], acts[i + 1])
        if need_params:
            w_sl, b_sl, _ = slices[i]
            g[w_sl] = (delta.T @ acts[i]).ravel()
            g[b_sl] = delta.sum(axis=0)
        delta = delta @ ws[i][0]
    return g, delta


def mlp_vjp(params: MlpParams, x, upstream):
    """Reverse pass: gradient of ``sum(upstream * output)`` w.r.t. parameters and input.

    For a batch, ``upstream`` has one row per input row and the parameter
    gradient is summed over rows; the input gradient keeps the batch axis.
    """
    xb, single = _check_input(params, x)
    u = np.asarray(upstream, dtype=float)
    ub = u[None, :] if single else u
    if ub.shape != (xb.shape[0], params.layer_sizes[-1]):
        raise ValueError(f"upstream shape {u.shape} does not match output")
    _, cache = forward_with_cache(params, xb)
    g, gx = backward_from_cache(params, cache, ub)
    return g, (gx[0] if single else gx)


def mlp_backward(params: MlpParams, x, upstream) -> FlatGrad:
    return mlp_vjp(params, x, upstream)[0]


@dataclass
class RmsState:
    second_moment: np.ndarray
    decay: float = 0.999
    floor: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.decay < 1.0 or self.floor <= 0:
            raise ValueError("need 0 < decay < 1 and floor > 0")

    @classmethod
    def zeros(cls, n, decay=0.999, floor=1e-8):
        return cls(np.zeros(n), decay, floor)


def rms_precondition(state: RmsState, grad: FlatGrad):
    """Update ``m <- αm + (1-α) g⊙g`` in place; return ``(C⁻¹g, C^(-1/2))``.

    C = diag(sqrt(m + ε)), so C^(-1/2) is ``(m + ε)^(-1/4)`` elementwise.
    """
    g = np.asarray(grad, dtype=float)
    if g.shape != state.second_moment.shape:
        raise ValueError("gradient and RMS state layouts differ")
    state.second_moment *= state.decay
    state.second_moment += (1.0 - state.decay) * g * g
    c = np.sqrt(state.second_moment + state.floor)
    return g / c, 1.0 / np.sqrt(c)


def sgld_update(params: MlpParams, grad: FlatGrad, state: RmsState, eta: float, sigma: float, direction: str, rng=None) -> MlpParams:
    """RMSProp-preconditioned Langevin step: ``p ± η C⁻¹g + sqrt(2η) σ C^(-1/2) ξ``.

    With ``sigma == 0`` no noise is drawn and ``rng`` may be None; this is the
    plain RMSProp ascent/descent step used by the GAD trainers.
    """
    if eta < 0 or sigma < 0:
        raise ValueError("eta and sigma must be non-negative")
    sign = {"ascend": 1.0, "descend": -1.0}[direction]
    scaled, inv_sqrt = rms_precondition(state, grad)
    flat = params.flat + sign * eta * scaled
    if sigma > 0:
        flat = flat + math.sqrt(2.0 * eta) * sigma * inv_sqrt * standard_normal(rng, flat.size)
    return params.with_flat(flat)


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    floor: float = 1e-8
    learning_rate: float = 1e-3

    @classmethod
    def zeros(cls, n, **kw):
        return cls(np.zeros(n), np.zeros(n), **kw)


def adam_update(params: MlpParams, grad: FlatGrad, state: AdamState) -> MlpParams:
    """Bias-corrected Adam descent step; mutates ``state``."""
    g = np.asarray(grad, dtype=float)
    if g.shape != state.first_moment.shape:
        raise ValueError("gradient and Adam state layouts differ")
    state.step_count += 1
    state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * g
    state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * g * g
    m_hat = state.first_moment / (1.0 - state.beta1**state.step_count)
    v_hat = state.second_moment / (1.0 - state.beta2**state.step_count)
    return params.with_flat(params.flat - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.floor))


def damped_average(current, incoming, beta: float):
    """Elementwise ``(1 - β) current + β incoming``."""
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    c = np.asarray(current, dtype=float)
    x = np.asarray(incoming, dtype=float)
    if c.shape != x.shape:
        raise ValueError("length mismatch")
    return (1.0 - beta) * c + beta * x


def soft_update(target, online, tau: float):
    """Target tracking ``τ target + (1 - τ) online``."""
    return tau * np.asarray(target) + (1.0 - tau) * np.asarray(online)


# Checkpoints are UTF-8 JSON:
#   {"format": "mixedne-mlp", "version": 1, "layer_sizes": [...],
#    "hidden_activation": str, "output_activation": str, "params": [float, ...]}
# Floats are written with repr, so a save/load round trip is exact.

def save_mlp(params: MlpParams, path, extra: dict | None = None):
    doc = {
        "format": "mixedne-mlp",
        "version": 1,
        "layer_sizes": list(params.layer_sizes),
        "hidden_activation": params.hidden_activation,
        "output_activation": params.output_activation,
        "params": [float(v) for v in params.flat],
    }
    if extra:
        doc["extra"] = extra
    Path(path).write_text(json.dumps(doc))


def load_mlp(path) -> MlpParams:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "mixedne-mlp":
        raise ValueError(f"{path} is not a network checkpoint")
    return MlpParams(doc["layer_sizes"], doc["hidden_activation"], doc["output_activation"], np.array(doc["params"]))
