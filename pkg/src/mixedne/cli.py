"""Command-line entry point: ``mixedne {spp,vpg,ddpg,eval,sweep,verify}``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .harness import EvalReport, ExperimentConfig, ExperimentKind
from .verify import CHECKS, run_all


def _rho_list(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad ρ list {text!r}") from exc


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="YAML experiment config")
    p.add_argument("--seed", type=int, action="append", dest="seeds", help="repeatable; overrides config seeds")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--rho-grid", type=_rho_list, help="comma-separated evaluation ρ values")
    p.add_argument("--algo", choices=harness.ALGORITHMS, help="actor update rule")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixedne", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("spp", "two-dimensional case study: GAD, EG and MixedNE-LD traces"),
        ("vpg", "train two-player VPG on the toy MDP and evaluate over ρ"),
        ("ddpg", "train two-player DDPG on the toy MDP and evaluate over ρ"),
        ("sweep", "run both actor update rules and compare their ρ profiles"),
    ):
        _common(sub.add_parser(name, help=help_))
    ev = sub.add_parser("eval", help="evaluate saved policies over the ρ grid")
    _common(ev)
    ev.add_argument("--policy", type=Path, action="append", required=True, help="checkpoint directory; repeatable")
    ev.add_argument("--episodes", type=int, help="episodes per (policy, ρ)")
    ver = sub.add_parser("verify", help="run the numerical theory and invariant checks")
    ver.add_argument("--check", action="append", choices=sorted(CHECKS), help="run only these checks")
    return parser


_KIND_OF = {"spp": ExperimentKind.SPP_CASE_STUDY, "vpg": ExperimentKind.VPG_TOY, "ddpg": ExperimentKind.DDPG_TOY, "eval": ExperimentKind.EVAL_SWEEP}


def resolve_config(args) -> ExperimentConfig:
    """Config file values first, then CLI flags on top."""
    cfg = harness.load_config(args.config) if args.config else ExperimentConfig()
    over = {}
    if args.command in _KIND_OF:
        over["kind"] = _KIND_OF[args.command]
    elif cfg.kind not in (ExperimentKind.VPG_TOY, ExperimentKind.DDPG_TOY):
        over["kind"] = ExperimentKind.VPG_TOY
    if args.seeds:
        over["seeds"] = tuple(args.seeds)
    if args.out:
        over["output_dir"] = args.out
    if args.algo:
        over["algorithm"] = args.algo
    if args.rho_grid:
        over["evaluation"] = replace(cfg.evaluation, rho_grid=args.rho_grid)
    if getattr(args, "episodes", None):
        over["evaluation"] = replace(over.get("evaluation", cfg.evaluation), episodes=args.episodes)
    return replace(cfg, **over)


def _eval(cfg: ExperimentConfig, policy_dirs) -> list[Path]:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    report = EvalReport()
    for i, d in enumerate(policy_dirs):
        policy = harness.load_policy(d)
        seed = cfg.seeds[i] if i < len(cfg.seeds) else i
        for row in harness.evaluate_over_grid(policy, seed, cfg.evaluation, cfg.env):
            report.add(row)
    paths = [cfg.output_dir / "eval_report.csv", cfg.output_dir / "summary.json"]
    report.to_csv(paths[0])
    paths[1].write_text(json.dumps(harness.aggregate([report]), sort_keys=True, indent=2) + "\n")
    return paths


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        results = run_all(args.check)
        for r in results:
            print(r.line())
        return 0 if all(r.passed for r in results) else 1
    cfg = resolve_config(args)
    if args.command == "spp":
        paths = harness.run_case_study(cfg)
    elif args.command in ("vpg", "ddpg"):
        paths = harness.run_toy_experiment(cfg)
    elif args.command == "sweep":
        paths = harness.run_sweep(cfg)
    else:
        paths = _eval(cfg, args.policy)
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
