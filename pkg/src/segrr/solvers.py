"""Epoch kernels for stochastic extragradient, SGDA and optimistic mirror descent.

Each kernel walks one epoch's component order. Step sizes are either a single
pair for the whole epoch or a sequence with one pair per inner iteration
(used by per-iteration decay rules). Components are queried through
``problem.component_value`` so that a wrapper can observe every index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ContractViolation, DivergenceError, ParameterError
from .metrics import MetricRow, TrajectoryRecord, grad_norm_sq
from .sampling import SamplingStrategy

SOLVERS = ("SEG", "SGDA", "OMD")
DIVERGENCE_FACTOR = 1e12


def _pair(steps):
    g1, g2 = (steps.gamma1, steps.gamma2) if hasattr(steps, "gamma1") else steps
    g1, g2 = float(g1), float(g2)
    if not (math.isfinite(g1) and math.isfinite(g2) and g1 >= 0 and g2 >= 0):
        raise ParameterError(f"step sizes must be finite and nonnegative, got ({g1}, {g2})")
    return g1, g2


def _step_list(steps, m):
    if isinstance(steps, (list, tuple)) and steps and (
        hasattr(steps[0], "gamma1") or isinstance(steps[0], (list, tuple))
    ):
        if len(steps) != m:
            raise ContractViolation(f"got {len(steps)} step pairs for {m} inner iterations")
        return [_pair(s) for s in steps]
    return [_pair(steps)] * m


class _Guard:
    def __init__(self, z_in, epoch):
        self.limit = DIVERGENCE_FACTOR * (1.0 + float(np.linalg.norm(z_in)))
        with np.errstate(over="ignore"):
            self.limit_sq = np.float64(self.limit) ** 2
        self.epoch = epoch

    def check(self, z, inner):
        # callers run under np.errstate(over="ignore", invalid="ignore")
        sq = z @ z
        if sq <= self.limit_sq:
            return
        # slow path: squared norm overflowed or the bound is genuinely exceeded
        norm = float(np.linalg.norm(z)) if np.all(np.isfinite(z)) else math.inf
        if norm > self.limit or not math.isfinite(norm):
            raise DivergenceError(
                f"iterate diverged at epoch {self.epoch}, inner step {inner} (||z|| = {norm:.3e})",
                epoch=self.epoch, inner=inner,
            )


def _prepare(problem, z_in, order):
    z = np.array(z_in, dtype=np.float64)
    if z.shape != (problem.d,):
        raise ContractViolation(f"z has shape {z.shape}, problem dimension is {problem.d}")
    for i in order:
        if not 0 <= i < problem.n:
            raise ContractViolation(f"component index {i} outside [0, {problem.n})")
    return z


def seg_epoch(problem, z_in, order, steps, epoch=0, callback=None):
    """One epoch of same-sample extragradient; returns the final iterate."""
    z = _prepare(problem, z_in, order)
    pairs = _step_list(steps, len(order))
    guard = _Guard(z, epoch)
    F = problem.component_value
    with np.errstate(over="ignore", invalid="ignore"):
        for inner, (i, (g1, g2)) in enumerate(zip(order, pairs)):
            z_bar = z - g2 * F(i, z)
            z = z - g1 * F(i, z_bar)
            guard.check(z, inner)
            if callback is not None:
                callback(inner, z)
    return z


def sgda_epoch(problem, z_in, order, steps, epoch=0, callback=None):
    """Plain stochastic gradient descent-ascent; ``gamma2`` is ignored."""
    z = _prepare(problem, z_in, order)
    pairs = _step_list(steps, len(order))
    guard = _Guard(z, epoch)
    F = problem.component_value
    with np.errstate(over="ignore", invalid="ignore"):
        for inner, (i, (g1, _)) in enumerate(zip(order, pairs)):
            z = z - g1 * F(i, z)
            guard.check(z, inner)
            if callback is not None:
                callback(inner, z)
    return z


@dataclass(frozen=True)
class SolverState:
    z: np.ndarray
    epoch: int = 0
    inner: int = 0
    memory: Optional[np.ndarray] = None  # last stochastic gradient (OMD)


def omd_epoch(problem, state, order, steps, callback=None):
    """Optimistic mirror descent ``z' = z - 2 g_t + g_{t-1}`` (scaled by ``gamma1``).

    ``g_t = F_i(z_t)`` for the current component; the previous gradient carries
    over between epochs and starts at zero.
    """
    z = _prepare(problem, state.z, order)
    pairs = _step_list(steps, len(order))
    guard = _Guard(z, state.epoch)
    F = problem.component_value
    prev = np.zeros(problem.d) if state.memory is None else np.asarray(state.memory, float)
    with np.errstate(over="ignore", invalid="ignore"):
        for inner, (i, (g1, _)) in enumerate(zip(order, pairs)):
            g = F(i, z)
            z = z - 2.0 * g1 * g + g1 * prev
            prev = g
            guard.check(z, inner)
            if callback is not None:
                callback(inner, z)
    return SolverState(z=z, epoch=state.epoch + 1, inner=0, memory=prev)


class WeightedAverageState:
    """Running ``sum_j G^-j z_0^j`` for the monotone-case averaged iterate.

    ``literal`` divides the sum by the number of terms ``k``. ``normalized``
    divides by the sum of the weights instead, which gives a genuine convex
    combination of the epoch iterates.
    """

    def __init__(self, G, d):
        if not G > 0:
            raise ParameterError(f"weight base must be positive, got {G}")
        self.G = float(G)
        self.k = 0
        self.total = np.zeros(d)
        self.weight_sum = 0.0
        self._weight = 1.0

    @classmethod
    def from_constants(cls, constants, d):
        return cls(6.0 * (constants.A + 4.0 * constants.L ** 2 + 1.0), d)

    def weight(self, j):
        return self.G ** (-j)

    def update(self, z_epoch, j):
        if j != self.k + 1:
            raise ContractViolation(f"weighted average expects epoch {self.k + 1}, got {j}")
        self._weight /= self.G
        self.total = self.total + self._weight * np.asarray(z_epoch, dtype=np.float64)
        self.weight_sum += self._weight
        self.k = j
        return self

    @property
    def literal(self):
        if self.k == 0:
            raise ContractViolation("weighted average is empty")
        return self.total / self.k

    @property
    def normalized(self):
        if self.k == 0:
            raise ContractViolation("weighted average is empty")
        return self.total / self.weight_sum


def update_weighted_average(state, z_epoch, j):
    return state.update(z_epoch, j)


def _row(problem, z, dist0, epoch, avg=None, iteration=None):
    d = problem.dist_sq(z)
    wn = wl = None
    if avg is not None and avg.k > 0:
        wn = grad_norm_sq(problem, avg.normalized)
        wl = grad_norm_sq(problem, avg.literal)
    return MetricRow(epoch=epoch, relative_error=d / dist0, dist_sq=d,
                     grad_norm_sq=grad_norm_sq(problem, z),
                     weighted_avg_grad_norm_sq=wn, weighted_avg_literal_grad_norm_sq=wl,
                     iteration=iteration)


def run_solver(problem, solver, strategy, schedule, K, z0=None, hooks=None,
               per_iteration=False, weighted_average=False):
    """Run ``K`` epochs and record metrics at each epoch boundary.

    Returns a :class:`TrajectoryRecord` with ``K + 1`` rows (row 0 is ``z0``).
    ``hooks`` maps names to ``f(problem, z) -> float`` evaluated with each row.
    With ``per_iteration`` a row is recorded after every inner step as well.
    On divergence the :class:`DivergenceError` is re-raised with the rows
    recorded so far in ``partial``.
    """
    if solver not in SOLVERS:
        raise ParameterError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    if K < 0:
        raise ParameterError(f"K must be >= 0, got {K}")
    if not isinstance(strategy, SamplingStrategy):
        raise ContractViolation("strategy must be a SamplingStrategy")
    if strategy.n != problem.n:
        raise ContractViolation(f"strategy built for n={strategy.n}, problem has n={problem.n}")
    z = np.zeros(problem.d) if z0 is None else np.array(z0, dtype=np.float64)
    if z.shape != (problem.d,):
        raise ContractViolation(f"z0 has shape {z.shape}, problem dimension is {problem.d}")
    dist0 = problem.dist_sq(z)
    if dist0 <= 0.0:
        raise ContractViolation("z0 lies in the solution set; relative error is undefined")

    hooks = dict(hooks or {})
    record = TrajectoryRecord(extra={name: [] for name in hooks}, seed=strategy.seed)
    avg = (WeightedAverageState.from_constants(problem.constants, problem.d)
           if weighted_average else None)

    def emit(zv, epoch, iteration=None):
        record.rows.append(_row(problem, zv, dist0, epoch, avg, iteration))
        for name, fn in hooks.items():
            record.extra[name].append(float(fn(problem, zv)))

    emit(z, 0, 0 if per_iteration else None)
    state = SolverState(z=z)
    n = problem.n
    # overflow is reported by the divergence guard, not as warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(K):
            order = strategy.epoch_order(k)
            if schedule.per_iteration:
                steps = [schedule.at(k, i) for i in range(len(order))]
            else:
                steps = schedule.at(k)
            callback = None
            if per_iteration:
                def callback(inner, zi, k=k):
                    if inner < len(order) - 1:
                        emit(zi, k, k * n + inner + 1)
            try:
                if solver == "SEG":
                    z = seg_epoch(problem, z, order, steps, epoch=k, callback=callback)
                elif solver == "SGDA":
                    z = sgda_epoch(problem, z, order, steps, epoch=k, callback=callback)
                else:
                    state = omd_epoch(problem, replace(state, z=z, epoch=k), order, steps,
                                      callback=callback)
                    z = state.z
            except DivergenceError as exc:
                exc.partial = record
                raise
            if avg is not None:
                avg.update(z, k + 1)
            emit(z, k + 1, (k + 1) * n if per_iteration else None)
    record.final_z = z
    return record
