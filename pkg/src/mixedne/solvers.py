"""Discrete and continuous-time solvers for the 2-D saddle-point games.

GAD and EG are the projected first-order baselines; MixedNE-LD runs nested
Langevin inner loops with damped running averages. The flows integrate the
common continuous-time limit of GAD/EG and its diagonal-Newton variant.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import ode
from .rng import make_rng, standard_normal
from .spp import (
    SaddleObjective,
    SaddlePoint2D,
    clamp,
    grad,
    hessian_diag,
    project,
    value,
)

Schedule = Union[float, Sequence[float]]


class SingularHessianError(ArithmeticError):
    pass


def _at(seq, t: int):
    if np.isscalar(seq):
        return seq
    return seq[t]


@dataclass(frozen=True)
class LdSchedule:
    """Per-outer-iteration step size, temperature and inner-loop length.

    Each of ``step_size``, ``thermal_noise`` and ``warmup_steps`` is either a
    constant or a sequence indexed by the outer iteration.
    """

    step_size: Schedule = 0.1
    thermal_noise: Schedule = 0.01
    warmup_steps: Union[int, Sequence[int]] = 50
    damping: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        for name, seq, ok in (
            ("step_size", self.step_size, lambda v: v > 0),
            ("thermal_noise", self.thermal_noise, lambda v: v >= 0),
            ("warmup_steps", self.warmup_steps, lambda v: int(v) == v and v >= 1),
        ):
            vals = [seq] if np.isscalar(seq) else list(seq)
            if not all(ok(v) for v in vals):
                raise ValueError(f"invalid {name}: {seq!r}")

    def eta(self, t: int) -> float:
        return float(_at(self.step_size, t))

    def eps(self, t: int) -> float:
        return float(_at(self.thermal_noise, t))

    def k(self, t: int) -> int:
        return int(_at(self.warmup_steps, t))


@dataclass
class SolverTrace:
    points: list = field(default_factory=list)
    values: list = field(default_factory=list)
    seed: int = 0

    def append(self, obj: SaddleObjective, p: SaddlePoint2D):
        self.points.append(p)
        self.values.append(value(obj, p))

    @property
    def final(self) -> SaddlePoint2D:
        return self.points[-1]

    def as_array(self) -> np.ndarray:
        return np.array([(p.theta, p.omega) for p in self.points])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "theta", "omega", "f_value"])
            for i, (p, f) in enumerate(zip(self.points, self.values)):
                w.writerow([i, repr(p.theta), repr(p.omega), repr(f)])


@dataclass(frozen=True)
class FlowConfig:
    t_end: float
    dt: float = 1e-3

    def __post_init__(self):
        if self.t_end < 0 or self.dt <= 0:
            raise ValueError("need t_end >= 0 and dt > 0")
        if self.t_end > 0 and self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


def gad_step(obj: SaddleObjective, p: SaddlePoint2D, eta: float) -> SaddlePoint2D:
    """Sequential projected ascent on θ, then descent on ω at the new θ."""
    box = obj.domain
    gt, _ = grad(obj, p)
    theta = clamp(p.theta + eta * gt, box.lo, box.hi)
    _, gw = grad(obj, SaddlePoint2D(theta, p.omega))
    omega = clamp(p.omega - eta * gw, box.lo, box.hi)
    return SaddlePoint2D(theta, omega)


def eg_step(obj: SaddleObjective, p: SaddlePoint2D, eta: float) -> SaddlePoint2D:
    box = obj.domain
    gt, gw = grad(obj, p)
    half = project(SaddlePoint2D(p.theta + eta * gt, p.omega - eta * gw), box)
    gt, gw = grad(obj, half)
    return project(SaddlePoint2D(p.theta + eta * gt, p.omega - eta * gw), box)


def run_first_order(obj: SaddleObjective, init: SaddlePoint2D, eta: float, iters: int, method: str = "gad") -> SolverTrace:
    step = {"gad": gad_step, "eg": eg_step}[method]
    trace = SolverTrace()
    p = init
    for _ in range(iters):
        p = step(obj, p, eta)
        trace.append(obj, p)
    return trace


def mixed_ne_ld_run(
    obj: SaddleObjective,
    init: SaddlePoint2D,
    sched: LdSchedule,
    outer_iters: int,
    rng_seed: int = 0,
) -> SolverTrace:
    """Run MixedNE-LD and record the outer iterates.

    Inside outer iteration t each player runs K_t projected Langevin steps
    against the opponent frozen at its outer value; both running averages are
    damped by β after every inner step, and the outer iterate moves a fraction
    β towards its running average. Per inner step two normals are drawn, the
    ω noise first and then the θ noise.
    """
    box = obj.domain
    if not box.contains(init):
        raise ValueError(f"initial point {init} outside {box}")
    rng = make_rng(rng_seed)
    beta = sched.damping
    lo, hi = box.lo, box.hi
    trace = SolverTrace(seed=rng_seed)
    theta, omega = init.theta, init.omega
    for t in range(outer_iters):
        eta, eps, k_t = sched.eta(t), sched.eps(t), sched.k(t)
        scale = eps * math.sqrt(2.0 * eta)
        th_bar, th_in = theta, theta
        om_bar, om_in = omega, omega
        for _ in range(k_t):
            xi, xi_p = standard_normal(rng, 2)
            g_th, _ = grad(obj, SaddlePoint2D(th_in, omega))
            _, g_om = grad(obj, SaddlePoint2D(theta, om_in))
            th_in = clamp(th_in + eta * g_th + scale * xi_p, lo, hi)
            om_in = clamp(om_in - eta * g_om + scale * xi, lo, hi)
            om_bar = (1.0 - beta) * om_bar + beta * om_in
            th_bar = (1.0 - beta) * th_bar + beta * th_in
        theta = (1.0 - beta) * theta + beta * th_bar
        omega = (1.0 - beta) * omega + beta * om_bar
        trace.append(obj, SaddlePoint2D(theta, omega))
    return trace


def _flow_trace(obj, states, seed=0) -> SolverTrace:
    trace = SolverTrace(seed=seed)
    for th, om in states:
        trace.append(obj, SaddlePoint2D(float(th), float(om)))
    return trace


def gad_flow(obj: SaddleObjective, init: SaddlePoint2D, cfg: FlowConfig) -> SolverTrace:
    """RK4 integration of dθ/dt = ∂f/∂θ, dω/dt = −∂f/∂ω, projected onto the box.

    A velocity component is zeroed when its coordinate sits on a face of the
    box and points outward. The trace holds the initial point plus one entry
    per RK4 step.
    """
    box = obj.domain
    if not box.contains(init):
        raise ValueError(f"initial point {init} outside {box}")
    lo, hi = box.lo, box.hi

    def field(y):
        gt, gw = grad(obj, SaddlePoint2D(y[0], y[1]))
        v = np.array([gt, -gw])
        for i in range(2):
            if (y[i] >= hi and v[i] > 0) or (y[i] <= lo and v[i] < 0):
                v[i] = 0.0
        return v

    states = ode.integrate(field, [init.theta, init.omega], cfg.dt, cfg.n_steps, post=lambda y: np.clip(y, lo, hi))
    return _flow_trace(obj, states)


def newton_flow(obj: SaddleObjective, init: SaddlePoint2D, cfg: FlowConfig, min_curvature: float = 1e-12) -> SolverTrace:
    """RK4 integration of the diagonal-Hessian-preconditioned flow.

    Unconstrained; raises :class:`SingularHessianError` as soon as either
    diagonal curvature drops below ``min_curvature`` at any RK stage.
    """

    def field(y):
        p = SaddlePoint2D(y[0], y[1])
        h_th, h_om = hessian_diag(obj, p)
        if abs(h_th) < min_curvature or abs(h_om) < min_curvature:
            raise SingularHessianError(f"diagonal Hessian ({h_th}, {h_om}) is singular at {p}")
        gt, gw = grad(obj, p)
        return np.array([gt / h_th, -gw / h_om])

    states = ode.integrate(field, [init.theta, init.omega], cfg.dt, cfg.n_steps)
    return _flow_trace(obj, states)


def _check_on_curve(theta1, omega1):
    if abs(theta1 * omega1 - 0.5) > 1e-12:
        raise ValueError(f"(θ₁, ω₁) = ({theta1}, {omega1}) is not on the curve θω = 0.5")


def expected_two_step_product(theta1: float, omega1: float, eta: float) -> float:
    """Closed-form E[θ₃ω₃] after two unprojected Langevin steps from θω = 0.5."""
    _check_on_curve(theta1, omega1)
    return theta1 * omega1 - 4.0 * eta**2 * (eta * (theta1**2 + omega1**2) + 14.0 * eta**2)


def mc_two_step_product(theta1: float, omega1: float, eta: float, n_samples: int, rng_seed: int = 0):
    """Monte-Carlo estimate of E[θ₃ω₃]; returns ``(mean, stderr)``.

    Simulates the unit-temperature, unprojected, undamped process: a pure
    noise step followed by one TrapA gradient ascent/descent step plus noise.
    """
    _check_on_curve(theta1, omega1)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = make_rng(rng_seed)
    xi = standard_normal(rng, (4, n_samples))
    a = math.sqrt(2.0 * eta)
    th2 = theta1 + a * xi[0]
    om2 = omega1 + a * xi[1]
    th3 = th2 + eta * (2.0 * th2 * om2**2 - om2) + a * xi[2]
    om3 = om2 - eta * (2.0 * th2**2 * om2 - th2) + a * xi[3]
    prod = th3 * om3
    mean = float(prod.mean())
    stderr = float(prod.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return mean, stderr
