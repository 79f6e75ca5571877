"""Command line entry point: ``segrr {generate,solve,bench,verify,stepsize}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness, verification
from .errors import ConfigError, SegrrError
from .problems import ProblemConstants
from .schedules import REGIMES, horizon_stepsize, max_stepsize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_VERIFY = 4


def _seed_list(text):
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers: {text}") from exc


def _load(args):
    config = harness.load_config(args.config)
    return config.with_overrides(seeds=args.seeds, epochs=args.epochs,
                                 output=getattr(args, "out", None))


def cmd_generate(args):
    config = harness.load_config(args.config)
    problem = harness.build_problem(config)
    text = problem.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _output_path(config, fallback):
    return config.output or fallback


def cmd_solve(args):
    config = _load(args)
    seed = config.seeds[0]
    config = config.with_overrides(seeds=[seed])
    record = harness.run_experiment(config)
    if record.nruns == 0:
        print(f"run diverged: {record.metadata['diverged'][seed]['message']}", file=sys.stderr)
        return EXIT_DIVERGED
    harness.emit_csv(record, _output_path(config, "trajectory.csv"))
    return EXIT_OK


def cmd_bench(args):
    config = _load(args)
    record = harness.run_experiment(config)
    for seed, info in record.metadata["diverged"].items():
        print(f"seed {seed}: {info['message']}", file=sys.stderr)
    if record.nruns == 0:
        return EXIT_DIVERGED
    harness.emit_csv(record, _output_path(config, "aggregate.csv"))
    return EXIT_OK


def cmd_verify(args):
    results = verification.run_all(quick=args.quick)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_stepsize(args):
    if args.config:
        config = harness.load_config(args.config)
        problem = harness.build_problem(config)
        constants, n = problem.constants, problem.n
    else:
        if args.L_max is None or args.n is None:
            raise ConfigError("give --config or both --L-max and --n", "stepsize")
        constants = ProblemConstants.manual(args.L_max, mu=args.mu or 0.0,
                                            lambda_min_plus=args.lambda_min_plus)
        n = args.n
    pair = max_stepsize(args.regime, constants, n)
    out = {"regime": args.regime, "n": n, "max": {"gamma1": pair.gamma1, "gamma2": pair.gamma2}}
    if args.K is not None:
        h = horizon_stepsize(args.regime, constants, n, args.K)
        out["horizon"] = {"K": args.K, "gamma1": h.gamma1, "gamma2": h.gamma2}
    print(json.dumps(out))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="segrr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def run_args(p):
        p.add_argument("--config", required=True)
        p.add_argument("--out")
        p.add_argument("--seeds", type=_seed_list, help="comma-separated; overrides the config")
        p.add_argument("--epochs", type=int, help="overrides the config")

    p = sub.add_parser("generate", help="write a problem instance as JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="single run (first seed), per-epoch CSV")
    run_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="multi-seed aggregate CSV")
    run_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="numerical checks of the sampling and variance bounds")
    p.add_argument("--quick", action="store_true", help="smaller sample counts")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stepsize", help="print theorem step sizes")
    p.add_argument("--regime", required=True, choices=REGIMES)
    p.add_argument("--config", help="take constants from the configured problem")
    p.add_argument("--mu", type=float)
    p.add_argument("--lambda-min-plus", type=float)
    p.add_argument("--L-max", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--K", type=int, help="also print the horizon-aware step sizes")
    p.set_defaults(func=cmd_stepsize)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SegrrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
