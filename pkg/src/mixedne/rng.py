"""Seeded random streams.

Every random draw in the package goes through a :class:`numpy.random.Generator`
backed by PCG64. Gaussian variates come from uniforms through the Box-Muller
transform rather than numpy's ziggurat sampler, so a trace depends only on the
PCG64 bit stream and on IEEE arithmetic:

    z = sqrt(-2 log(1 - u1)) * cos(2 pi u2)

with ``u1, u2`` drawn as consecutive doubles from ``Generator.random``. One pair
of uniforms is spent per normal (the sine branch is discarded), which keeps the
consumption count equal to ``2 * size`` regardless of call pattern.
"""
from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    return np.random.Generator(np.random.PCG64(int(seed)))


def standard_normal(rng: np.random.Generator, size=None):
    """Standard normals via Box-Muller; scalar when ``size`` is None."""
    n = 1 if size is None else int(np.prod(size))
    u = rng.random(2 * n)
    z = np.sqrt(-2.0 * np.log1p(-u[0::2])) * np.cos(TWO_PI * u[1::2])
    if size is None:
        return float(z[0])
    return z.reshape(size)


def uniform(rng: np.random.Generator, lo: float, hi: float, size=None):
    u = rng.random(size)
    return lo + (hi - lo) * u
