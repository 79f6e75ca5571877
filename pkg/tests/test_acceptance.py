"""Acceptance criteria 1-11.

Each test appends one ``CRITERION N: PASS|FAIL ...`` line to the session
report (printed in the terminal summary) and then asserts. Runtime budgets
are part of each criterion and are measured inside the test, including any
shared problem construction.
"""
import json
import time
from pathlib import Path

import numpy as np
import pytest

from segrr import cli, harness
from segrr.errors import DivergenceError
from segrr.metrics import log_log_slope, plateau_estimate
from segrr.schedules import Schedule
from segrr.solvers import run_solver
from segrr.sampling import SamplingStrategy
from segrr.verification import (check_epoch_drift, check_sampling_variance,
                                check_variance_bound)

pytestmark = pytest.mark.acceptance

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _cfg(name, **overrides):
    cfg = harness.load_config(CONFIGS / name)
    if not overrides:
        return cfg
    doc = dict(cfg.__dict__)
    doc.update(overrides)
    return harness.ExperimentConfig(**doc)


def _report(lines, number, ok, detail):
    lines.append(f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def _mean_series(cfg, problem, metric, schedule=None, z0=None):
    schedule = schedule or harness._schedule(cfg, problem)
    z0 = harness.build_initial_point(cfg, problem) if z0 is None else z0
    runs = [harness.run_single(cfg, s, problem, schedule, z0) for s in cfg.seeds]
    return harness.aggregate(runs, (metric,)).mean[metric]


@pytest.fixture(scope="module")
def quadratic():
    """The n=100, d=20 strongly monotone instance and the seconds spent building it."""
    t0 = time.perf_counter()
    problem = harness.build_problem(_cfg("quadratic_theorem_rr.json"))
    problem.constants
    return problem, time.perf_counter() - t0


def test_criterion_1_sampling_variance(acceptance_report):
    t0 = time.perf_counter()
    res = check_sampling_variance(populations=50, max_n=6, tol=1e-12)
    dt = time.perf_counter() - t0
    _report(acceptance_report, 1, res.passed and dt < 1.0, f"{res.detail}; {dt:.2f}s (< 1s)")


def test_criterion_2_variance_bound(acceptance_report):
    t0 = time.perf_counter()
    res = check_variance_bound(points=1000)
    dt = time.perf_counter() - t0
    _report(acceptance_report, 2, res.passed and dt < 5.0, f"{res.detail}; {dt:.2f}s (< 5s)")


def test_criterion_3_epoch_drift(acceptance_report):
    t0 = time.perf_counter()
    res = check_epoch_drift(permutations=1000, n=8, d=4, mu=1.0, L=2.0)
    dt = time.perf_counter() - t0
    _report(acceptance_report, 3, res.passed and dt < 10.0, f"{res.detail}; {dt:.2f}s (< 10s)")


def test_criterion_4_strongly_monotone_neighbourhood(acceptance_report, quadratic):
    problem, build = quadratic
    t0 = time.perf_counter()
    series = {regime: _mean_series(_cfg(f"quadratic_theorem_{regime.lower()}.json"), problem,
                                   "relative_error")
              for regime in ("RR", "Uniform", "SO", "IEG")}
    dt = build + time.perf_counter() - t0
    rr = series["RR"]
    plateau = {k: plateau_estimate(v) for k, v in series.items()}
    a = rr[-1] <= 1.0 and rr[-1] <= rr[50]
    b = plateau["RR"] <= plateau["Uniform"]
    c = plateau["SO"] <= 3 * plateau["RR"] and plateau["IEG"] <= 3 * plateau["RR"]
    detail = (f"RR err[K]={rr[-1]:.3e} err[50]={rr[50]:.3e}; plateaus RR={plateau['RR']:.3e} "
              f"U={plateau['Uniform']:.3e} SO={plateau['SO']:.3e} IEG={plateau['IEG']:.3e}; "
              f"{dt:.1f}s (< 60s)")
    _report(acceptance_report, 4, a and b and c and dt < 60.0, detail)


def test_criterion_5_neighbourhood_scaling(acceptance_report, quadratic):
    problem, build = quadratic
    t0 = time.perf_counter()
    K = 3000  # long enough for both step sizes to reach their plateaus
    gamma = harness._schedule(_cfg("quadratic_theorem_rr.json"), problem).at(0).gamma1
    plateau = {}
    for regime in ("RR", "Uniform"):
        cfg = _cfg(f"quadratic_theorem_{regime.lower()}.json", epochs=K)
        for g in (gamma, gamma / 2):
            plateau[regime, g] = plateau_estimate(
                _mean_series(cfg, problem, "relative_error", Schedule.constant(g, multiplier=2.0)))
    dt = build + time.perf_counter() - t0
    ratio_rr = plateau["RR", gamma] / plateau["RR", gamma / 2]
    ratio_u = plateau["Uniform", gamma] / plateau["Uniform", gamma / 2]
    ok = ratio_rr > ratio_u and ratio_rr >= 1.5 * ratio_u and dt < 120.0
    _report(acceptance_report, 5, ok,
            f"ratio_RR={ratio_rr:.3f} ratio_U={ratio_u:.3f} (need RR >= 1.5 U) at K={K}; {dt:.1f}s (< 120s)")


def test_criterion_6_affine_neighbourhood_and_sgda(acceptance_report):
    t0 = time.perf_counter()
    cfg_rr = _cfg("bilinear_theorem_rr.json")
    problem = harness.build_problem(cfg_rr)
    rr = _mean_series(cfg_rr, problem, "dist_sq")
    uni = _mean_series(_cfg("bilinear_theorem_uniform.json"), problem, "dist_sq")
    p_rr, p_u = plateau_estimate(rr), plateau_estimate(uni)
    seg_ok = rr[-1] < rr[0] and p_rr < rr[0] and p_rr <= p_u

    sgda_cfg = _cfg("bilinear_theorem_rr.json", solver="SGDA", epochs=50)
    schedule = harness._schedule(sgda_cfg, problem)
    z0 = harness.build_initial_point(sgda_cfg, problem)
    diverged, runs = 0, []
    for seed in sgda_cfg.seeds:
        try:
            runs.append(harness.run_single(sgda_cfg, seed, problem, schedule, z0).series("dist_sq"))
        except DivergenceError:
            diverged += 1
    if runs:
        mean = np.mean(runs, axis=0)
        rises = int(np.sum(np.diff(mean) > 0))
        sgda_ok = diverged == len(sgda_cfg.seeds) or rises == 50
    else:
        rises, sgda_ok = 0, True
    dt = time.perf_counter() - t0
    detail = (f"SEG-RR dist2 {rr[0]:.4e} -> {rr[-1]:.4e}, plateaus RR={p_rr:.4e} U={p_u:.4e}; "
              f"SGDA gamma1={schedule.at(0).gamma1:.3e}: {diverged}/{len(sgda_cfg.seeds)} diverged, "
              f"mean dist2 rose in {rises}/50 epochs; {dt:.1f}s (< 60s)")
    _report(acceptance_report, 6, seg_ok and sgda_ok and dt < 60.0, detail)


def test_criterion_7_switching_rate(acceptance_report):
    t0 = time.perf_counter()
    base = _cfg("quadratic_switching_rr.json")
    cfg = _cfg("quadratic_switching_rr.json",
               schedule={"rule": "switching", "regime": "strongly-monotone"})
    problem = harness.build_problem(cfg)
    schedule = harness._schedule(cfg, problem)
    k_star = schedule.k_star
    gamma_max = schedule.at(0).gamma1
    # measure throughput on a short run, then decide whether the window is reachable
    probe = 200
    tp = time.perf_counter()
    run_solver(problem, "SEG", SamplingStrategy("RR", problem.n, base.seeds[0]), schedule, probe)
    per_epoch = (time.perf_counter() - tp) / probe
    K = 20 * k_star
    projected = per_epoch * K * len(cfg.seeds)
    budget = 120.0 - (time.perf_counter() - t0)
    if projected > budget:
        _report(acceptance_report, 7, False,
                f"gamma_max={gamma_max:.3e} gives k*={k_star}; window [2k*, 20k*] needs {K} epochs x "
                f"{len(cfg.seeds)} seeds, projected {projected / 3600:.1f} h (> 120s budget)")
    dist = _mean_series(cfg.with_overrides(epochs=K), problem, "dist_sq", schedule)
    k = np.arange(2 * k_star, K + 1)
    slope = log_log_slope(k, dist[k])
    dt = time.perf_counter() - t0
    _report(acceptance_report, 7, -1.6 <= slope <= -0.6 and dt < 120.0,
            f"k*={k_star}, slope={slope:.3f} (band [-1.6, -0.6]); {dt:.1f}s (< 120s)")


def test_criterion_8_monotone_horizon(acceptance_report):
    t0 = time.perf_counter()
    cfg = _cfg("bilinear_monotone_horizon_rr.json")
    problem = harness.build_problem(cfg)
    value, gamma = {}, {}
    for K in (1000, 8000):
        c = cfg.with_overrides(epochs=K)
        schedule = harness._schedule(c, problem)
        gamma[K] = schedule.at(0).gamma1
        value[K] = _mean_series(c, problem, "weighted_avg_grad_norm_sq", schedule)[-1]
    dt = time.perf_counter() - t0
    ok = value[8000] < value[1000] and dt < 120.0
    _report(acceptance_report, 8, ok,
            f"normalized ||F(z~)||^2: K=1000 (gamma1={gamma[1000]:.4e}) {value[1000]:.6e}, "
            f"K=8000 (gamma1={gamma[8000]:.4e}) {value[8000]:.6e}; {dt:.1f}s (< 120s)")


def test_criterion_9_bench_determinism(acceptance_report, tmp_path):
    t0 = time.perf_counter()
    doc = {
        "problem": {"kind": "quadratic-scsc", "params": {"n": 100, "d": 20, "mu": 1.0, "L": 10.0}, "seed": 1},
        "solver": "SEG", "sampling": "RR",
        "schedule": {"rule": "theorem-constant", "regime": "strongly-monotone"},
        "epochs": 200, "seeds": [1, 2, 3, 4, 5],
    }
    cfg = tmp_path / "minimal.json"
    cfg.write_text(json.dumps(doc))
    outs = [tmp_path / "first.csv", tmp_path / "second.csv"]
    codes = [cli.main(["bench", "--config", str(cfg), "--out", str(o)]) for o in outs]
    same = outs[0].read_bytes() == outs[1].read_bytes()
    dt = time.perf_counter() - t0
    _report(acceptance_report, 9, codes == [0, 0] and same and dt < 60.0,
            f"exit codes {codes}, identical bytes: {same} ({outs[0].stat().st_size} B); {dt:.1f}s (< 60s)")


STEPSIZE_CASES = [
    (["--regime", "strongly-monotone", "--mu", "1", "--L-max", "1", "--n", "1"], "max", 0.0123091490979332733, 2),
    (["--regime", "affine", "--lambda-min-plus", "1", "--L-max", "1", "--n", "1"], "max", 0.0456435464587638428, 4),
    (["--regime", "monotone", "--L-max", "1", "--n", "1"], "max", 0.235702260395515841, 2),
    (["--regime", "strongly-monotone", "--mu", "1", "--L-max", "1", "--n", "4", "--K", "100"],
     "horizon", 0.00671156055214024312, 2),
    (["--regime", "monotone", "--L-max", "1", "--n", "1", "--K", "8"], "horizon", 0.235702260395515841, 2),
]


def test_criterion_10_stepsize_calculator(acceptance_report, capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for args, key, gamma1, mult in STEPSIZE_CASES:
        assert cli.main(["stepsize", *args]) == 0
        out = json.loads(capsys.readouterr().out)[key]
        worst = max(worst, abs(out["gamma1"] - gamma1) / gamma1,
                    abs(out["gamma2"] - mult * gamma1) / (mult * gamma1))
    dt = time.perf_counter() - t0
    _report(acceptance_report, 10, worst <= 1e-12 and dt < 1.0,
            f"{len(STEPSIZE_CASES)} cases, max relative error {worst:.2e} (<= 1e-12); {dt:.3f}s (< 1s)")


def test_criterion_11_wgan(acceptance_report):
    t0 = time.perf_counter()
    final = {}
    for solver in ("seg", "omd"):
        for regime in ("rr", "uniform"):
            cfg = _cfg(f"wgan_{solver}_{regime}.json")
            problem = harness.build_problem(cfg)
            final[solver, regime] = _mean_series(cfg, problem, "theta_distance")[-1]
    dt = time.perf_counter() - t0
    ok = (final["seg", "rr"] <= final["seg", "uniform"] and final["omd", "rr"] <= final["omd", "uniform"]
          and dt < 60.0)
    _report(acceptance_report, 11, ok,
            f"final ||theta - (3,4)||: SEG RR={final['seg', 'rr']:.4f} U={final['seg', 'uniform']:.4f}; "
            f"OMD RR={final['omd', 'rr']:.4f} U={final['omd', 'uniform']:.4f}; {dt:.1f}s (< 60s)")
