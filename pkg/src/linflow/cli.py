"""Command-line front end.

Subcommands map to experiment groups::

    simulate   cross-solver agreement on matched paths (frames CSV included)
    chaos      chaos-expansion order ladder and tail bounds
    invert     inverse-flow convergence
    diagonal   diagonal moments, extreme-value growth, trace plateau, three series
    schatten   smoothing-rate fits and the fixed-point solver
    validate   every experiment (the full acceptance sweep)

Common flags: --config, --seed, --out, --paths, --threads.  The thread
count (flag or LINFLOW_THREADS) only distributes independent seeds and
never changes any number.  Exit status: 0 all criteria passed, 1 some
failed, 2 configuration/schema error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, load_config, merge_config
from .experiments import VALIDATE_SEQUENCE, default_config, run_experiment

SUBCOMMANDS = {
    "simulate": ("cross_solver_agreement",),
    "chaos": ("chaos_expansion",),
    "invert": ("inverse_flow_convergence",),
    "diagonal": ("diagonal_moments", "skorokhod_growth", "trace_plateau", "three_series"),
    "schatten": ("schatten_gamma", "picard_fixed_point"),
    "validate": VALIDATE_SEQUENCE,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linflow",
                                     description="linear stochastic flow experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, experiments in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run: {', '.join(experiments)}")
        p.add_argument("--config", help="YAML config file (deep-merged over defaults)")
        p.add_argument("--seed", type=int, help="override mc.seed")
        p.add_argument("--out", default="linflow_out", help="output directory")
        p.add_argument("--paths", type=int, help="override mc.n_paths / mc.n_seeds / mc.n_draws")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: LINFLOW_THREADS or 1)")
    return parser


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("LINFLOW_THREADS")
    return max(1, int(env)) if env else 1


def _overrides(args) -> dict:
    mc = {}
    if args.seed is not None:
        mc["seed"] = args.seed
    override: dict = {"mc": mc} if mc else {}
    return override


def _apply_paths(cfg: dict, n: int | None) -> dict:
    if n is None:
        return cfg
    mc = cfg.setdefault("mc", {})
    for key in ("n_paths", "n_seeds", "n_draws"):
        if key in mc:
            mc[key] = n
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    threads = _threads(args)
    file_cfg = {}
    if args.config:
        try:
            file_cfg = load_config(args.config)
        except (OSError, ConfigError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2

    experiments = SUBCOMMANDS[args.command]
    # a flat config naming one experiment narrows the run to it
    if "experiment" in file_cfg:
        experiments = (file_cfg["experiment"],)

    exit_code = 0
    for name in experiments:
        try:
            cfg = default_config(name)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        if file_cfg.get("experiment") == name:
            cfg = merge_config(cfg, file_cfg)
        elif isinstance(file_cfg.get(name), dict):
            # sectioned config: one block per experiment name
            cfg = merge_config(cfg, file_cfg[name])
        cfg = merge_config(cfg, _overrides(args))
        cfg = _apply_paths(cfg, args.paths)
        try:
            result = run_experiment(cfg, out_dir=args.out, threads=threads)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        for criterion in result.criteria:
            print(f"{name}: {criterion.describe()}")
        if not result.passed:
            exit_code = 1
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
