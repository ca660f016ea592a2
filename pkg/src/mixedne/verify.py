"""Numerical checks of the solver theory and core invariants, each reporting pass/fail.

Used by ``mixedne verify``. Each check returns a :class:`CheckResult` with a
one-line detail string; none of them raise on a failed comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .envs import MixingConfig, mix_actions
from .nn import RmsState, init_mlp, mlp_backward, mlp_forward, sgld_update
from .rng import make_rng
from .solvers import (
    FlowConfig,
    LdSchedule,
    expected_two_step_product,
    gad_flow,
    mc_two_step_product,
    mixed_ne_ld_run,
    newton_flow,
    run_first_order,
)
from .spp import Kind, SaddleObjective, SaddlePoint2D, grad, value


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


TRAP_A = SaddleObjective(Kind.TRAP_A)
TRAP_B = SaddleObjective(Kind.TRAP_B)
RIDGE = SaddleObjective(Kind.RIDGE)
FAR = SaddlePoint2D(1.5, 1.5)


def norm_drift(trace) -> float:
    xy = trace.as_array()
    return float(np.max(np.abs((xy**2).sum(axis=1) - (xy[0] ** 2).sum())))


def check_flow_trapping() -> CheckResult:
    err = abs(gad_flow(TRAP_A, FAR, FlowConfig(10.0, 1e-3)).final.product - 0.5)
    return CheckResult("continuous GAD trapping", err < 1e-3, f"|θω-0.5|={err:.2e}")


def check_flow_norm() -> CheckResult:
    # interior run; from (1.5, 1.5) the circle leaves the box and projection breaks the identity
    drift = norm_drift(gad_flow(TRAP_A, SaddlePoint2D(1.0, 1.0), FlowConfig(5.0, 1e-3)))
    return CheckResult("GAD flow conserves θ²+ω²", drift < 1e-5, f"max drift={drift:.2e}")


def check_discrete_trapping() -> CheckResult:
    worst_prod, worst_norm = 0.0, math.inf
    for obj in (TRAP_A, TRAP_B):
        for method in ("gad", "eg"):
            p = run_first_order(obj, FAR, 0.1, 5000, method).final
            worst_prod = max(worst_prod, abs(p.product - 0.5))
            worst_norm = min(worst_norm, math.hypot(p.theta, p.omega))
    return CheckResult("discrete GAD/EG trapping", worst_prod < 0.05 and worst_norm > 0.5, f"max |θω-0.5|={worst_prod:.3g}, min radius={worst_norm:.3g}")


def check_langevin_escape(n_seeds: int = 20, need: int = 15) -> CheckResult:
    sched = LdSchedule(0.1, 0.01, 50, 0.5)
    finals = [mixed_ne_ld_run(TRAP_A, FAR, sched, 200, s).final.product for s in range(n_seeds)]
    hits = sum(abs(p) < 0.1 for p in finals)
    return CheckResult("MixedNE-LD escape", hits >= need, f"{hits}/{n_seeds} seeds end with |θω|<0.1 (need {need})")


def check_two_step_identity(n: int = 1_000_000) -> CheckResult:
    parts, ok = [], True
    for th, om in ((1.0, 0.5), (0.5, 1.0), (2.0, 0.25)):
        target = expected_two_step_product(th, om, 0.1)
        mean, se = mc_two_step_product(th, om, 0.1, n, 0)
        z = abs(mean - target) / se
        ok &= z < 3.0
        parts.append(f"({th},{om}) z={z:.2f}")
    return CheckResult("two-step expectation identity", ok, ", ".join(parts))


def check_newton_product() -> CheckResult:
    worst = 0.0
    for init in (SaddlePoint2D(1.0, 1.0), SaddlePoint2D(1.0, 0.5)):
        xy = newton_flow(TRAP_A, init, FlowConfig(5.0, 1e-3)).as_array()
        worst = max(worst, float(np.max(np.abs(xy[:, 0] * xy[:, 1] - init.product))))
    return CheckResult("Newton flow conserves θω", worst < 1e-5, f"max drift={worst:.2e}")


def check_ridge_exploration(seed: int = 0) -> CheckResult:
    fo_ok = True
    for method in ("gad", "eg"):
        pts = run_first_order(RIDGE, FAR, 0.1, 5000, method).as_array()
        fo_ok &= abs(pts[-1, 1]) < 1e-3 and float(np.max(np.abs(pts[-1] - pts[-2]))) < 1e-9
    xy = mixed_ne_ld_run(RIDGE, FAR, LdSchedule(), 500, seed).as_array()
    sd, med = float(np.std(xy[:, 0], ddof=1)), float(np.median(np.abs(xy[:, 1])))
    ok = fo_ok and sd > 0.1 and med < 0.15
    return CheckResult("ridge exploration", ok, f"first-order converged={fo_ok}, θ std={sd:.3g}, median |ω|={med:.3g}")


def check_gradients(n_nets: int = 100) -> CheckResult:
    rng = make_rng(0)
    worst = 0.0
    for i in range(n_nets):
        act = ("tanh", "relu")[i % 2]
        sizes = (int(rng.integers(1, 4)), int(rng.integers(2, 6)), int(rng.integers(1, 3)))
        net = init_mlp(sizes, rng, act, "tanh" if i % 3 else "identity")
        # random biases keep ReLU pre-activations off the kink at 0
        net = net.with_flat(net.flat + 0.5 * rng.normal(size=net.n_params))
        x, u = rng.normal(size=sizes[0]), rng.normal(size=sizes[-1])
        g = mlp_backward(net, x, u)
        fd = np.empty_like(g)
        for j in range(net.n_params):
            e = np.zeros(net.n_params)
            e[j] = 1e-5
            fd[j] = (u @ mlp_forward(net.with_flat(net.flat + e), x) - u @ mlp_forward(net.with_flat(net.flat - e), x)) / 2e-5
        worst = max(worst, float(np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-8)))
    spp_worst = 0.0
    for obj in (TRAP_A, TRAP_B, RIDGE):
        for th, om in rng.uniform(-2, 2, size=(20, 2)):
            gt, gw = grad(obj, SaddlePoint2D(th, om))
            h = 1e-6
            fdt = (value(obj, SaddlePoint2D(th + h, om)) - value(obj, SaddlePoint2D(th - h, om))) / (2 * h)
            fdw = (value(obj, SaddlePoint2D(th, om + h)) - value(obj, SaddlePoint2D(th, om - h))) / (2 * h)
            spp_worst = max(spp_worst, abs(gt - fdt), abs(gw - fdw))
    ok = worst < 1e-4 and spp_worst < 1e-6
    return CheckResult("gradient correctness", ok, f"MLP rel err={worst:.2e}, objective abs err={spp_worst:.2e}")


def check_reductions() -> CheckResult:
    rng = make_rng(1)
    net = init_mlp((2, 3, 1), rng)
    g = np.where(rng.random(net.n_params) < 0.5, -0.75, 0.75)
    # g⊙g equals m, so m stays 0.5625 and m + floor = 1 gives C = I exactly
    state = RmsState(np.full(net.n_params, 0.5625), 0.5, 0.4375)
    sgld_ok = np.array_equal(sgld_update(net, g, state, 0.125, 0.0, "ascend").flat, net.flat + 0.125 * g)
    a = rng.uniform(-1, 1, 16)
    mix_ok = np.array_equal(mix_actions(a, rng.uniform(-1, 1, 16), MixingConfig(0.0)), a)
    p = SaddlePoint2D(0.3, -0.7)
    got = mixed_ne_ld_run(TRAP_A, p, LdSchedule(0.1, 0.0, 1, 1.0), 1, 0).final
    gt, gw = grad(TRAP_A, p)
    ld_ok = got == SaddlePoint2D(p.theta + 0.1 * gt, p.omega - 0.1 * gw)
    return CheckResult("reductions", sgld_ok and mix_ok and ld_ok, f"sgld={sgld_ok}, mixing={mix_ok}, langevin={ld_ok}")


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "flow": check_flow_trapping,
    "flow_norm": check_flow_norm,
    "discrete": check_discrete_trapping,
    "escape": check_langevin_escape,
    "two_step": check_two_step_identity,
    "newton": check_newton_product,
    "ridge": check_ridge_exploration,
    "gradients": check_gradients,
    "reductions": check_reductions,
}


def run_all(names=None) -> list[CheckResult]:
    return [CHECKS[n]() for n in (names or CHECKS)]
