#!/usr/bin/env python3
"""Rate of the switching schedule when gamma_max is larger than the theorem allows.

With the theorem constant the switch point k* is tens of millions of epochs
for small instances, so this script uses an explicit gamma_max (with the
``unchecked`` override) and fits the log-log slope of the seed-averaged
squared distance over [2k*, 20k*].

    python3 scripts/switching_beyond_theory.py --gamma-max 0.1
"""
import argparse
from pathlib import Path

import numpy as np

from segrr import harness
from segrr.metrics import log_log_slope

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=ROOT / "configs" / "quadratic_switching_rr.json")
    ap.add_argument("--gamma-max", type=float, default=0.1)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args(argv)

    cfg = harness.load_config(args.config)
    schedule = dict(cfg.schedule, gamma_max=args.gamma_max, unchecked=True)
    cfg = harness.ExperimentConfig(**dict(cfg.__dict__, schedule=schedule))
    problem = harness.build_problem(cfg)
    sched = harness._schedule(cfg, problem)
    k_star = sched.k_star
    K = 20 * k_star
    cfg = cfg.with_overrides(epochs=K, seeds=list(range(1, args.seeds + 1)))
    print(f"mu={problem.constants.mu:.4f} gamma_max={args.gamma_max} k*={k_star} K={K}")
    z0 = harness.build_initial_point(cfg, problem)
    runs = [harness.run_single(cfg, s, problem, sched, z0) for s in cfg.seeds]
    dist = harness.aggregate(runs, ("dist_sq",)).mean["dist_sq"]
    k = np.arange(2 * k_star, K + 1)
    print(f"log-log slope over [2k*, 20k*]: {log_log_slope(k, dist[k]):.3f}")


if __name__ == "__main__":
    main()
