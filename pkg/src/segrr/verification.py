"""Numerical checks of the sampling and variance inequalities the solvers rely on.

Each check returns a :class:`CheckResult`; the ``verify`` CLI subcommand runs
them all and exits nonzero if any fails.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .metrics import variance_bound_residual
from .problems import generate_problem, initial_point
from .rng import Xoshiro256
from .sampling import SamplingStrategy, wr_sample_variance, wr_sample_variance_enumerated
from .solvers import seg_epoch


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def check_sampling_variance(populations=50, max_n=6, seed=0, tol=1e-12):
    """Closed-form without-replacement variance against subset enumeration."""
    rng = Xoshiro256(seed)
    worst = 0.0
    cases = 0
    for n in range(2, max_n + 1):
        for _ in range(populations):
            dim = 1 + rng.below(3)
            X = np.array(rng.normals(n * dim)).reshape(n, dim)
            for d in range(1, n + 1):
                exact = wr_sample_variance(X, d)
                brute = wr_sample_variance_enumerated(X, d)
                worst = max(worst, abs(exact - brute) / max(1.0, abs(brute)))
                cases += 1
    return CheckResult("sampling-variance", worst <= tol,
                       f"{cases} cases, max deviation {worst:.3e} (tol {tol:g})")


DEFAULT_KINDS = {
    "quadratic-scsc": {"n": 20, "d": 10, "mu": 1.0, "L": 10.0},
    "bilinear": {"n": 20, "d": 10, "lambda_min_plus": 1.0, "L_max": 10.0},
    "wgan-toy": {"n": 20, "d": 10, "mean": [float(i) for i in range(10)], "scale": 0.1},
}


def _random_points(problem, count, rng, spread=10.0):
    centre = problem.solution.point
    pts = np.array(rng.normals(count * problem.d)).reshape(count, problem.d)
    return centre + spread * pts


def check_variance_bound(points=1000, seed=0, kinds=None, atol=1e-9):
    """Component variance against ``A ||z - z*||^2 + 2 sigma*^2`` at random points."""
    kinds = kinds or DEFAULT_KINDS
    rng = Xoshiro256(seed)
    worst = math.inf
    for kind, params in kinds.items():
        problem = generate_problem(kind, params, seed=seed + 1)
        c = problem.constants
        for z in _random_points(problem, points, rng):
            dz = z - problem.solution.point
            rhs = c.A * float(dz @ dz) + 2.0 * c.sigma_star_sq
            worst = min(worst, variance_bound_residual(problem, z) / max(1.0, rhs))
    return CheckResult("variance-bound", worst >= -atol,
                       f"{len(kinds)} kinds x {points} points, min relative slack {worst:.3e}")


def partial_sum_deviation(problem, z, d):
    """``d^2 E ||mean of d components without replacement - F(z)||^2`` by enumeration."""
    vals = problem.component_values(z)
    mean = vals.mean(axis=0)
    total = 0.0
    count = 0
    for subset in itertools.combinations(range(problem.n), d):
        diff = vals[list(subset)].mean(axis=0) - mean
        total += float(diff @ diff)
        count += 1
    return d * d * total / count


def check_partial_sums(points=50, seed=0):
    """Prefix deviation bound ``d(n-d)/(n-1) (A ||z - z*||^2 + 2 sigma*^2)`` for every ``d``."""
    problem = generate_problem("bilinear", {"n": 6, "d": 2, "lambda_min_plus": 0.5, "L_max": 2.0},
                               seed=seed + 1)
    c = problem.constants
    rng = Xoshiro256(seed)
    n = problem.n
    worst = math.inf
    for z in _random_points(problem, points, rng, spread=3.0):
        dz = z - problem.solution.point
        base = c.A * float(dz @ dz) + 2.0 * c.sigma_star_sq
        for d in range(1, n + 1):
            lhs = partial_sum_deviation(problem, z, d)
            rhs = d * (n - d) / (n - 1) * base
            worst = min(worst, (rhs - lhs) / max(1.0, base))
    return CheckResult("prefix-deviation", worst >= -1e-9,
                       f"{points} points x {n} prefix lengths, min scaled slack {worst:.3e}")


def drift_threshold_gamma1(n, L_max):
    """Largest update step for which the epoch-drift bound is stated."""
    return 1.0 / (3.0 * math.sqrt(2.0 * n * (n - 1)) * L_max)


def epoch_drift_bound(constants, n, gamma1, dist0_sq):
    L = constants.L
    return ((10.0 * n * n * L * L + constants.A * (25.0 + n)) * gamma1 ** 2 * dist0_sq
            + 2.0 * (n + 25.0) * gamma1 ** 2 * constants.sigma_star_sq)


def empirical_epoch_drift(problem, z0, gamma1, gamma2, permutations, seed=0):
    """Mean over random permutations of ``(1/n) sum_{j<n} ||z_j - z_0||^2`` for one epoch."""
    strategy = SamplingStrategy("RR", problem.n, seed)
    total = 0.0
    for k in range(permutations):
        acc = [0.0]

        def record(inner, z):
            if inner < problem.n - 1:  # z_{inner+1}; j = 0 contributes zero
                diff = z - z0
                acc[0] += float(diff @ diff)

        seg_epoch(problem, z0, strategy.epoch_order(k), (gamma1, gamma2), callback=record)
        total += acc[0] / problem.n
    return total / permutations


def check_epoch_drift(permutations=1000, seed=0, n=8, d=4, mu=1.0, L=2.0):
    problem = generate_problem("quadratic-scsc", {"n": n, "d": d, "mu": mu, "L": L}, seed=seed + 1)
    c = problem.constants
    g1 = drift_threshold_gamma1(problem.n, c.L_max)
    z0 = problem.solution.point + initial_point(problem.d, seed=seed)
    dist0 = problem.dist_sq(z0)
    emp = empirical_epoch_drift(problem, z0, g1, 2.0 * g1, permutations, seed)
    bound = epoch_drift_bound(c, problem.n, g1, dist0)
    return CheckResult("epoch-drift", emp <= bound,
                       f"empirical {emp:.6e} <= bound {bound:.6e} over {permutations} permutations")


def check_determinism(seed=3):
    from .schedules import Schedule
    from .solvers import run_solver

    problem = generate_problem("bilinear", {"n": 10, "d": 3, "lambda_min_plus": 0.5, "L_max": 2.0},
                               seed=seed)
    again = generate_problem("bilinear", {"n": 10, "d": 3, "lambda_min_plus": 0.5, "L_max": 2.0},
                             seed=seed)
    same_problem = np.array_equal(problem.Q, again.Q) and np.array_equal(problem.b, again.b)
    sched = Schedule.constant(0.01, multiplier=4.0)
    z0 = initial_point(problem.d, seed=seed)
    runs = [run_solver(problem, "SEG", SamplingStrategy("RR", problem.n, seed), sched, 20, z0)
            for _ in range(2)]
    same_run = runs[0].rows == runs[1].rows
    return CheckResult("determinism", same_problem and same_run,
                       f"problem identical: {same_problem}, trajectory identical: {same_run}")


def run_all(quick=False):
    scale = 10 if quick else 1
    return [
        check_sampling_variance(populations=50 // scale),
        check_variance_bound(points=1000 // scale),
        check_partial_sums(points=50 // scale),
        check_epoch_drift(permutations=1000 // scale),
        check_determinism(),
    ]
