"""Experiment runner: case-study sweeps, toy-MDP training, robustness evaluation.

Every output is a pure function of (config, seeds). CSV floats are written
with ``repr`` and JSON with sorted keys, so reruns are byte-identical.

Summary JSON schemas
--------------------
Case study (``case_study_summary.json``)::

    {"runs": [{"method", "objective", "init", "seed", "theta", "omega",
               "f_value", "product"}, ...],
     "median_abs_product": {"<method>/<objective>/<init>": float, ...}}

Toy experiment (``summary.json``, produced by :func:`aggregate`)::

    {"rho_grid": [...], "seeds": [...],
     "per_rho": {"<rho>": {"mean": float, "std": float, "n": int}, ...}}
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path

import numpy as np
import yaml

from .envs import MixingConfig, ToyMdpConfig
from .nn import init_mlp, load_mlp, save_mlp
from .rl.common import TwoPlayerPolicy, discounted_return
from .rl.ddpg import DdpgConfig, ddpg_gad_train, ddpg_mixed_ne_ld_train
from .rl.rollout import rollout
from .rl.vpg import VpgConfig, vpg_gad_train, vpg_mixed_ne_ld_train
from .rng import make_rng
from .solvers import LdSchedule, mixed_ne_ld_run, run_first_order
from .spp import BoxDomain, Kind, SaddleObjective, SaddlePoint2D

DEFAULT_RHO_GRID = (0.0, 0.1, 0.2, 0.3, 0.4)
ALGORITHMS = ("mixedneld", "gad")
# VPG policy weights come from a stream disjoint from the training seeds
POLICY_INIT_OFFSET = 10_000


class ExperimentKind(str, Enum):
    SPP_CASE_STUDY = "spp_case_study"
    VPG_TOY = "vpg_toy"
    DDPG_TOY = "ddpg_toy"
    EVAL_SWEEP = "eval_sweep"


@dataclass(frozen=True)
class CaseStudyConfig:
    step_size: float = 0.1
    first_order_iters: int = 5000
    outer_iters: int = 200
    schedule: LdSchedule = field(default_factory=LdSchedule)
    far_init: tuple = (1.5, 1.5)
    near_init: tuple = (0.1, 0.1)

    def __post_init__(self):
        if self.step_size <= 0 or self.first_order_iters < 1 or self.outer_iters < 1:
            raise ValueError("case study needs a positive step size and iteration counts")


@dataclass(frozen=True)
class PolicyConfig:
    """Shape of the VPG actor networks and the stochastic policy."""

    hidden: tuple = (16, 16)
    hidden_activation: str = "relu"
    policy_std: float = 0.3
    delta: float = 0.1

    def __post_init__(self):
        MixingConfig(self.delta)
        if self.policy_std <= 0:
            raise ValueError("policy_std must be positive")


@dataclass(frozen=True)
class EvalConfig:
    rho_grid: tuple = DEFAULT_RHO_GRID
    episodes: int = 20
    train_rho: float = 0.2

    def __post_init__(self):
        if not self.rho_grid or self.episodes < 1:
            raise ValueError("need a nonempty ρ grid and at least one episode")
        if any(not 0.0 <= r <= 1.0 for r in self.rho_grid):
            raise ValueError("ρ values must lie in [0, 1]")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: ExperimentKind = ExperimentKind.VPG_TOY
    algorithm: str = "mixedneld"
    seeds: tuple = (0,)
    output_dir: Path = Path("runs")
    case_study: CaseStudyConfig = field(default_factory=CaseStudyConfig)
    env: ToyMdpConfig = field(default_factory=ToyMdpConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    vpg: VpgConfig = field(default_factory=VpgConfig)
    ddpg: DdpgConfig = field(default_factory=DdpgConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)

    def __post_init__(self):
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds) or min(self.seeds) < 0:
            raise ValueError("seeds must be a nonempty list of distinct non-negative integers")


_SECTIONS = {
    "case_study": CaseStudyConfig,
    "env": ToyMdpConfig,
    "policy": PolicyConfig,
    "vpg": VpgConfig,
    "ddpg": DdpgConfig,
    "evaluation": EvalConfig,
}


def _build(cls, values: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kw = {}
    for k, v in values.items():
        if k == "schedule":
            v = LdSchedule(**{n: tuple(x) if isinstance(x, list) else x for n, x in v.items()})
        elif isinstance(v, list):
            v = tuple(v)
        kw[k] = v
    return cls(**kw)


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from nested plain data (as parsed from YAML)."""
    doc = dict(doc or {})
    kw = {}
    for name, cls in _SECTIONS.items():
        if name in doc:
            kw[name] = _build(cls, doc.pop(name) or {})
    if "seeds" in doc:
        doc["seeds"] = tuple(doc["seeds"])
    top = {f.name for f in fields(ExperimentConfig)} - set(_SECTIONS)
    unknown = set(doc) - top
    if unknown:
        raise ValueError(f"unknown top-level keys: {sorted(unknown)}")
    return ExperimentConfig(**doc, **kw)


def load_config(path) -> ExperimentConfig:
    return config_from_dict(yaml.safe_load(Path(path).read_text()))


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Plain-data view of a config, suitable for YAML/JSON manifests."""

    def plain(v):
        if isinstance(v, Enum):
            return v.value
        if isinstance(v, Path):
            return str(v)
        if isinstance(v, dict):
            return {k: plain(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [plain(x) for x in v]
        return v

    return plain(asdict(cfg))


def _write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return path


# ---------------------------------------------------------------- case study

_CASE_OBJECTIVES = (("TrapA", Kind.TRAP_A), ("TrapB", Kind.TRAP_B), ("Ridge", Kind.RIDGE))


def run_case_study(cfg: ExperimentConfig) -> list[Path]:
    """Run GAD, EG and MixedNE-LD on the three objectives from far and near inits.

    First-order methods are deterministic and get one trace per cell;
    MixedNE-LD gets one trace per seed. Returns the written paths.
    """
    cs = cfg.case_study
    out = cfg.output_dir / "case_study"
    out.mkdir(parents=True, exist_ok=True)
    written, runs = [], []
    for obj_name, kind in _CASE_OBJECTIVES:
        obj = SaddleObjective(kind, BoxDomain())
        for init_name, xy in (("far", cs.far_init), ("near", cs.near_init)):
            init = SaddlePoint2D(*map(float, xy))
            jobs = [(m, None, lambda m=m: run_first_order(obj, init, cs.step_size, cs.first_order_iters, m)) for m in ("gad", "eg")]
            jobs += [("mixedneld", s, lambda s=s: mixed_ne_ld_run(obj, init, cs.schedule, cs.outer_iters, s)) for s in cfg.seeds]
            for method, seed, run in jobs:
                trace = run()
                tag = f"{method}_{obj_name}_{init_name}" + ("" if seed is None else f"_seed{seed}")
                path = out / f"{tag}.csv"
                trace.to_csv(path)
                written.append(path)
                p = trace.final
                runs.append(
                    {
                        "method": method,
                        "objective": obj_name,
                        "init": init_name,
                        "seed": seed,
                        "theta": p.theta,
                        "omega": p.omega,
                        "f_value": trace.values[-1],
                        "product": p.product,
                    }
                )
    medians = {}
    for r in runs:
        medians.setdefault(f"{r['method']}/{r['objective']}/{r['init']}", []).append(abs(r["product"]))
    summary = {"runs": runs, "median_abs_product": {k: float(np.median(v)) for k, v in medians.items()}}
    written.append(_write_json(out / "case_study_summary.json", summary))
    return written


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class EvalRow:
    rho: float
    seed: int
    mean_return: float
    std_return: float
    episodes: int


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)

    CSV_COLUMNS = ("rho", "seed", "mean_return", "std_return", "episodes")

    def add(self, row: EvalRow):
        self.rows.append(row)

    @property
    def rho_grid(self) -> tuple:
        return tuple(sorted({r.rho for r in self.rows}))

    def check_bounds(self, env_cfg: ToyMdpConfig) -> bool:
        lo, hi = env_cfg.return_bounds()
        return all(lo <= r.mean_return <= hi for r in self.rows)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.CSV_COLUMNS)
            for r in sorted(self.rows, key=lambda r: (r.rho, r.seed)):
                w.writerow([repr(r.rho), r.seed, repr(r.mean_return), repr(r.std_return), r.episodes])

    @classmethod
    def from_csv(cls, path) -> "EvalReport":
        with open(path, newline="") as fh:
            rows = [
                EvalRow(float(d["rho"]), int(d["seed"]), float(d["mean_return"]), float(d["std_return"]), int(d["episodes"]))
                for d in csv.DictReader(fh)
            ]
        return cls(rows)


def evaluate_policy(policy: TwoPlayerPolicy, rho: float, episodes: int = 20, rng_seed: int = 0, env_cfg: ToyMdpConfig | None = None):
    """Mean and std of discounted returns for the agent alone, acting on its mean.

    The adversary, exploration noise and policy std are all switched off.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    cfg = (env_cfg or ToyMdpConfig()).with_rho(rho)
    rng = make_rng(rng_seed)
    net = policy.agent_net
    rets = np.array([discounted_return(rollout(net, net, 0.0, 0.0, cfg, rng).rewards, cfg.discount) for _ in range(episodes)])
    return float(rets.mean()), float(rets.std())


def evaluate_over_grid(policy: TwoPlayerPolicy, seed: int, ev: EvalConfig, env_cfg: ToyMdpConfig) -> list[EvalRow]:
    rows = []
    for rho in ev.rho_grid:
        m, s = evaluate_policy(policy, rho, ev.episodes, seed, env_cfg)
        rows.append(EvalRow(float(rho), seed, m, s, ev.episodes))
    return rows


def aggregate(reports) -> dict:
    """Cross-seed mean and std of per-seed mean returns, keyed by ρ.

    Rows are sorted before reduction, so the result does not depend on the
    order of reports or rows. Raises ValueError when reports cover different
    ρ grids.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("nothing to aggregate")
    grid = reports[0].rho_grid
    for rep in reports[1:]:
        if rep.rho_grid != grid:
            raise ValueError(f"ρ grid mismatch: {rep.rho_grid} vs {grid}")
    rows = sorted((r for rep in reports for r in rep.rows), key=lambda r: (r.rho, r.seed, r.mean_return))
    per_rho = {}
    for rho in grid:
        vals = np.array([r.mean_return for r in rows if r.rho == rho])
        per_rho[repr(rho)] = {"mean": float(vals.mean()), "std": float(vals.std()), "n": int(vals.size)}
    return {"rho_grid": list(grid), "seeds": sorted({r.seed for r in rows}), "per_rho": per_rho}


# ---------------------------------------------------------------- training


def init_vpg_policy(pc: PolicyConfig, seed: int) -> TwoPlayerPolicy:
    rng = make_rng(POLICY_INIT_OFFSET + seed)
    sizes = (1, *pc.hidden, 1)
    agent = init_mlp(sizes, rng, pc.hidden_activation, "tanh")
    adv = init_mlp(sizes, rng, pc.hidden_activation, "tanh")
    return TwoPlayerPolicy(agent, adv, MixingConfig(pc.delta), pc.policy_std)


def train_one(cfg: ExperimentConfig, seed: int):
    """Train the configured algorithm once at the training ρ; returns ``(policy, RunRecord)``."""
    env = cfg.env.with_rho(cfg.evaluation.train_rho)
    mix = cfg.algorithm == "mixedneld"
    if cfg.kind is ExperimentKind.DDPG_TOY:
        fn = ddpg_mixed_ne_ld_train if mix else ddpg_gad_train
        return fn(env, cfg.ddpg, seed)
    if cfg.kind is ExperimentKind.VPG_TOY:
        fn = vpg_mixed_ne_ld_train if mix else vpg_gad_train
        return fn(env, init_vpg_policy(cfg.policy, seed), cfg.vpg, seed)
    raise ValueError(f"{cfg.kind.value} is not a training experiment")


def save_policy(policy: TwoPlayerPolicy, directory: Path, seed: int, env_cfg: ToyMdpConfig) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {"delta": policy.delta, "policy_std": policy.policy_std, "seed": seed, "env": asdict(env_cfg)}
    paths = [directory / "agent.json", directory / "adversary.json"]
    save_mlp(policy.agent_net, paths[0], manifest)
    save_mlp(policy.adversary_net, paths[1], manifest)
    return paths


def load_policy(directory) -> TwoPlayerPolicy:
    directory = Path(directory)
    agent = load_mlp(directory / "agent.json")
    adv = load_mlp(directory / "adversary.json")
    manifest = json.loads((directory / "agent.json").read_text()).get("extra", {})
    return TwoPlayerPolicy(agent, adv, MixingConfig(manifest.get("delta", 0.0)), manifest.get("policy_std", 0.0))


def run_toy_experiment(cfg: ExperimentConfig) -> list[Path]:
    """Train per seed at the training ρ, evaluate over the ρ grid, write records and summaries."""
    out = cfg.output_dir / f"{cfg.kind.value}_{cfg.algorithm}"
    out.mkdir(parents=True, exist_ok=True)
    written, report = [], EvalReport()
    for seed in cfg.seeds:
        policy, record = train_one(cfg, seed)
        path = out / f"run_seed{seed}.csv"
        record.to_csv(path)
        written.append(path)
        written += save_policy(policy, out / f"policy_seed{seed}", seed, cfg.env)
        for row in evaluate_over_grid(policy, seed, cfg.evaluation, cfg.env):
            report.add(row)
    report.to_csv(out / "eval_report.csv")
    written.append(out / "eval_report.csv")
    written.append(_write_json(out / "summary.json", aggregate([report])))
    return written


def compare_summaries(mix: dict, gad: dict) -> dict:
    """Per-ρ comparison of two aggregated summaries; counts grid points where MixedNE-LD ≥ GAD."""
    if mix["rho_grid"] != gad["rho_grid"]:
        raise ValueError("summaries cover different ρ grids")
    keys = list(mix["per_rho"])
    wins = [k for k in keys if mix["per_rho"][k]["mean"] >= gad["per_rho"][k]["mean"]]
    return {"rho_grid": mix["rho_grid"], "mixedneld_wins": len(wins), "grid_points": len(keys), "winning_rho": wins}


def run_sweep(cfg: ExperimentConfig) -> list[Path]:
    """Run the toy experiment for both algorithms and write a comparison JSON."""
    written, summaries = [], {}
    for algo in ALGORITHMS:
        paths = run_toy_experiment(replace(cfg, algorithm=algo))
        written += paths
        summaries[algo] = json.loads(paths[-1].read_text())
    cmp = compare_summaries(summaries["mixedneld"], summaries["gad"])
    written.append(_write_json(cfg.output_dir / f"{cfg.kind.value}_comparison.json", cmp))
    return written
