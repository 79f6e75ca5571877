"""Step-size rules producing ``(gamma1, gamma2)`` per epoch.

``gamma1`` is the update step and ``gamma2`` the extrapolation step. The
theorem-derived rules tie them by a fixed multiplier: 2 for the strongly
monotone and monotone regimes, 4 for the affine regime.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import ParameterError, RegimeMismatchError

STRONGLY_MONOTONE = "strongly-monotone"
AFFINE = "affine"
MONOTONE = "monotone"
REGIMES = (STRONGLY_MONOTONE, AFFINE, MONOTONE)
MULTIPLIER = {STRONGLY_MONOTONE: 2.0, AFFINE: 4.0, MONOTONE: 2.0}

RULES = ("constant", "theorem-constant", "horizon-aware", "switching", "polynomial-decay")


@dataclass(frozen=True)
class StepSizePair:
    gamma1: float
    gamma2: float

    def __post_init__(self):
        for name in ("gamma1", "gamma2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be positive and finite, got {v!r}")


def _check_regime(regime):
    if regime not in REGIMES:
        raise ParameterError(f"unknown regime {regime!r}; expected one of {REGIMES}")


def _require_constants(regime, constants):
    if constants.L_max is None or not constants.L_max > 0:
        raise RegimeMismatchError(f"{regime} step sizes need L_max > 0, got {constants.L_max}")
    if regime == STRONGLY_MONOTONE and not constants.mu > 0:
        raise RegimeMismatchError(
            f"strongly-monotone step sizes require strong monotonicity mu > 0 "
            f"(measured mu = {constants.mu})"
        )
    if regime == AFFINE and not (constants.lambda_min_plus or 0.0) > 0:
        raise RegimeMismatchError(
            "affine step sizes require a positive smallest nonzero singular value "
            f"lambda_min_plus (got {constants.lambda_min_plus})"
        )


def _max_gamma1(regime, constants, n):
    L = constants.L_max
    if regime == STRONGLY_MONOTONE:
        return constants.mu / (10.0 * L * L * math.sqrt(10.0 * n * n + 2.0 * n + 54.0))
    if regime == AFFINE:
        return constants.lambda_min_plus / (2.0 * math.sqrt(120.0) * n * L * L)
    return 1.0 / (3.0 * math.sqrt(2.0) * n * L)


def max_stepsize(regime, constants, n):
    """Largest constant step sizes admitted by the convergence guarantee of ``regime``."""
    _check_regime(regime)
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    _require_constants(regime, constants)
    g1 = _max_gamma1(regime, constants, n)
    return StepSizePair(g1, MULTIPLIER[regime] * g1)


def horizon_stepsize(regime, constants, n, K):
    """Step sizes tuned to a known total number of epochs ``K``."""
    base = max_stepsize(regime, constants, n)
    if K < 2:
        raise ParameterError(f"horizon-aware step sizes need K >= 2, got {K}")
    log_term = math.log(math.sqrt(n) * K)
    if log_term <= 0:
        raise ParameterError(f"log(sqrt(n) * K) must be positive, got {log_term}")
    if regime == STRONGLY_MONOTONE:
        cand = 4.0 * log_term / (constants.mu * n * K)
    elif regime == AFFINE:
        cand = 2.0 * log_term / (constants.lambda_min_plus * n * K)
    else:
        cand = (n * K) ** (-1.0 / 3.0)
    g1 = min(base.gamma1, cand)
    return StepSizePair(g1, MULTIPLIER[regime] * g1)


@dataclass(frozen=True)
class Schedule:
    """Immutable step-size rule; query with :meth:`at`.

    Build instances with the class-method constructors rather than directly.
    ``per_iteration`` rules change inside an epoch and are indexed by the
    inner-iteration counter ``t = k * n + i``.
    """

    rule: str
    regime: Optional[str] = None
    params: dict = field(default_factory=dict)

    @property
    def per_iteration(self):
        return self.rule == "polynomial-decay"

    @property
    def k_star(self):
        return self.params.get("k_star")

    def at(self, k, i=0):
        if k < 0 or i < 0:
            raise ParameterError(f"epoch and inner index must be >= 0, got ({k}, {i})")
        p = self.params
        if self.rule in ("constant", "theorem-constant", "horizon-aware"):
            return p["pair"]
        if self.rule == "switching":
            if k < p["k_star"]:
                return p["pair"]
            g1 = _switching_gamma1(self.regime, p["modulus"], k)
            return StepSizePair(g1, MULTIPLIER[self.regime] * g1)
        t = k * p["n"] + i + p["offset"]
        return StepSizePair(p["gamma1_scale"] / t ** p["gamma1_exponent"],
                            p["gamma2_scale"] / t ** p["gamma2_exponent"])

    # constructors

    @classmethod
    def constant(cls, gamma1, gamma2=None, multiplier=2.0, regime=None):
        gamma2 = multiplier * gamma1 if gamma2 is None else gamma2
        return cls("constant", regime, {"pair": StepSizePair(float(gamma1), float(gamma2))})

    @classmethod
    def theorem_constant(cls, regime, constants, n):
        return cls("theorem-constant", regime, {"pair": max_stepsize(regime, constants, n)})

    @classmethod
    def horizon_aware(cls, regime, constants, n, K):
        return cls("horizon-aware", regime,
                   {"pair": horizon_stepsize(regime, constants, n, K), "K": K})

    @classmethod
    def switching(cls, regime, constants, n, gamma_max=None, unchecked=False):
        """Constant ``gamma_max`` until epoch ``k*``, then an O(1/k) decay.

        ``gamma_max`` defaults to the theorem constant. Larger values are
        refused unless ``unchecked`` is set.
        """
        if regime not in (STRONGLY_MONOTONE, AFFINE):
            raise ParameterError(f"switching schedules exist for strongly-monotone and affine, not {regime!r}")
        _require_constants(regime, constants)
        theory = _max_gamma1(regime, constants, n)
        if gamma_max is None:
            gamma_max = theory
        gamma_max = float(gamma_max)
        if not unchecked and gamma_max > theory * (1 + 1e-12):
            raise ParameterError(
                f"gamma_max={gamma_max:.6g} exceeds the admissible {theory:.6g}; "
                "pass unchecked=True for runs beyond theory"
            )
        if regime == STRONGLY_MONOTONE:
            modulus = constants.mu
            k_star = math.ceil(64.0 / (modulus ** 2 * gamma_max ** 2))
        else:
            modulus = constants.lambda_min_plus
            k_star = math.ceil(16.0 / (modulus ** 2 * gamma_max ** 2))
        first = _switching_gamma1(regime, modulus, k_star)
        if first > gamma_max:
            raise ParameterError(
                f"decay branch starts at {first:.6g} > gamma_max={gamma_max:.6g} at k*={k_star}"
            )
        pair = StepSizePair(gamma_max, MULTIPLIER[regime] * gamma_max)
        return cls("switching", regime, {"pair": pair, "k_star": k_star, "modulus": modulus})

    @classmethod
    def polynomial_decay(cls, n, gamma1_scale=0.1, gamma1_exponent=0.7,
                         gamma2_scale=1.0, gamma2_exponent=0.0, offset=19):
        if n < 1:
            raise ParameterError(f"n must be >= 1, got {n}")
        if offset <= 0:
            raise ParameterError("offset must be positive so the first step is finite")
        return cls("polynomial-decay", None, {
            "n": int(n), "offset": offset,
            "gamma1_scale": float(gamma1_scale), "gamma1_exponent": float(gamma1_exponent),
            "gamma2_scale": float(gamma2_scale), "gamma2_exponent": float(gamma2_exponent),
        })


def _switching_gamma1(regime, modulus, k):
    scale = 4.0 if regime == STRONGLY_MONOTONE else 2.0
    return scale * (2 * k + 1) / (modulus * (k + 1) ** 2)


def problem_regime(problem_class):
    """Step-size regime matching a problem class tag."""
    return {"strongly-monotone": STRONGLY_MONOTONE,
            "affine-monotone": AFFINE, "monotone": MONOTONE}[problem_class]


def build_schedule(spec, constants, n, K, problem_class=None):
    """Schedule from a config record ``{rule, regime, gamma1, gamma2, gamma_max, K, multiplier, unchecked}``.

    Without ``unchecked`` the theorem regime must match the problem class: a
    strongly-monotone rule needs a strongly monotone problem and an affine rule
    an affine one (every shipped problem is affine).
    """
    rule = spec["rule"]
    regime = spec.get("regime")
    unchecked = bool(spec.get("unchecked", False))
    if rule not in RULES:
        raise ParameterError(f"unknown schedule rule {rule!r}")
    if rule in ("theorem-constant", "horizon-aware", "switching"):
        if regime is None:
            raise ParameterError(f"rule {rule!r} needs a regime")
        _check_regime(regime)
        if not unchecked and problem_class is not None:
            if regime == STRONGLY_MONOTONE and problem_class != "strongly-monotone":
                raise RegimeMismatchError(
                    "strongly-monotone step sizes require a strongly monotone operator "
                    f"(mu > 0); problem class is {problem_class}"
                )
        if unchecked and regime == STRONGLY_MONOTONE and not constants.mu > 0:
            raise RegimeMismatchError("strongly-monotone formulas are undefined for mu = 0")
    if rule == "constant":
        if "gamma1" not in spec:
            raise ParameterError("constant schedule needs gamma1")
        mult = spec.get("multiplier", MULTIPLIER.get(regime, 2.0))
        return Schedule.constant(spec["gamma1"], spec.get("gamma2"), mult, regime)
    if rule == "theorem-constant":
        sched = Schedule.theorem_constant(regime, constants, n)
    elif rule == "horizon-aware":
        sched = Schedule.horizon_aware(regime, constants, n, spec.get("K", K))
    elif rule == "switching":
        return Schedule.switching(regime, constants, n, spec.get("gamma_max"), unchecked)
    else:
        return Schedule.polynomial_decay(n, **spec.get("decay", {}))
    if "multiplier" in spec:
        g1 = sched.params["pair"].gamma1
        sched = Schedule(sched.rule, regime, {**sched.params,
                                              "pair": StepSizePair(g1, spec["multiplier"] * g1)})
    return sched
