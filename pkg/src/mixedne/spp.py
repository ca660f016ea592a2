"""Closed-form two-dimensional saddle-point objectives.

Three polynomial games on a box, each with hand-coded derivatives:

* ``TRAP_A``: f = θ²ω² − θω
* ``TRAP_B``: f = θω − θ²ω²
* ``RIDGE``:  f = θ²ω²

The first player (θ) maximizes, the second (ω) minimizes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass


class Kind(str, enum.Enum):
    TRAP_A = "trap_a"
    TRAP_B = "trap_b"
    RIDGE = "ridge"


@dataclass(frozen=True)
class BoxDomain:
    lo: float = -2.0
    hi: float = 2.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty box: lo={self.lo} >= hi={self.hi}")

    def contains(self, p: "SaddlePoint2D") -> bool:
        return self.lo <= p.theta <= self.hi and self.lo <= p.omega <= self.hi


@dataclass(frozen=True)
class SaddlePoint2D:
    theta: float
    omega: float

    @property
    def product(self) -> float:
        return self.theta * self.omega


@dataclass(frozen=True)
class SaddleObjective:
    kind: Kind
    domain: BoxDomain = BoxDomain()

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))


def value(obj: SaddleObjective, p: SaddlePoint2D) -> float:
    t, w = p.theta, p.omega
    if obj.kind is Kind.TRAP_A:
        return t * t * w * w - t * w
    if obj.kind is Kind.TRAP_B:
        return t * w - t * t * w * w
    return t * t * w * w


def grad(obj: SaddleObjective, p: SaddlePoint2D) -> tuple[float, float]:
    """Return ``(df/dθ, df/dω)`` (no ascent/descent sign applied)."""
    t, w = p.theta, p.omega
    if obj.kind is Kind.TRAP_A:
        return 2.0 * t * w * w - w, 2.0 * t * t * w - t
    if obj.kind is Kind.TRAP_B:
        return w - 2.0 * t * w * w, t - 2.0 * t * t * w
    return 2.0 * t * w * w, 2.0 * t * t * w


def hessian_diag(obj: SaddleObjective, p: SaddlePoint2D) -> tuple[float, float]:
    """Return ``(d²f/dθ², d²f/dω²)``."""
    t, w = p.theta, p.omega
    if obj.kind is Kind.TRAP_B:
        return -2.0 * w * w, -2.0 * t * t
    return 2.0 * w * w, 2.0 * t * t


def is_stationary(obj: SaddleObjective, p: SaddlePoint2D, tol: float) -> bool:
    if tol <= 0:
        raise ValueError("tol must be positive")
    gt, gw = grad(obj, p)
    return abs(gt) <= tol and abs(gw) <= tol


def is_pure_ne(obj: SaddleObjective, p: SaddlePoint2D, tol: float) -> bool:
    """Closed-form equilibrium test.

    The trap games have the single equilibrium (0, 0); every point on the
    line ω = 0 is an equilibrium of the ridge game. A point must also pass
    :func:`is_stationary` at the same tolerance, so near-misses off the
    equilibrium set are never reported as equilibria.
    """
    if obj.kind is Kind.RIDGE:
        near = abs(p.omega) <= tol
    else:
        near = abs(p.theta) <= tol and abs(p.omega) <= tol
    return near and is_stationary(obj, p, tol)


def clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def project(p: SaddlePoint2D, box: BoxDomain) -> SaddlePoint2D:
    return SaddlePoint2D(clamp(p.theta, box.lo, box.hi), clamp(p.omega, box.lo, box.hi))
