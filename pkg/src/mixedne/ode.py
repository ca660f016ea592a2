"""Fixed-step classical Runge-Kutta integration."""
from __future__ import annotations

from typing import Callable

import numpy as np


def rk4_step(field: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float) -> np.ndarray:
    k1 = field(y)
    k2 = field(y + 0.5 * dt * k1)
    k3 = field(y + 0.5 * dt * k2)
    k4 = field(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(field, y0, dt: float, n_steps: int, post=None) -> np.ndarray:
    """Integrate an autonomous field and return all ``n_steps + 1`` states.

    ``post`` is applied to every state after a step; the projected flows use
    it to clamp back into the box.
    """
    y = np.asarray(y0, dtype=float)
    out = np.empty((n_steps + 1, y.size))
    out[0] = y
    for i in range(n_steps):
        y = rk4_step(field, y, dt)
        if post is not None:
            y = post(y)
        out[i + 1] = y
    return out
