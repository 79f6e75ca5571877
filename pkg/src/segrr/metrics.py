"""Convergence measures, trajectory records and inequality checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractViolation, ParameterError

PLATEAU_MIN_LENGTH = 20
PLATEAU_FRACTION = 0.1


@dataclass(frozen=True)
class MetricRow:
    epoch: int
    relative_error: float
    dist_sq: float
    grad_norm_sq: float
    weighted_avg_grad_norm_sq: Optional[float] = None
    weighted_avg_literal_grad_norm_sq: Optional[float] = None
    iteration: Optional[int] = None  # inner-iteration counter in per-iteration mode


ROW_METRICS = ("relative_error", "dist_sq", "grad_norm_sq",
               "weighted_avg_grad_norm_sq", "weighted_avg_literal_grad_norm_sq")


@dataclass
class TrajectoryRecord:
    """Metric rows of one seeded run, plus any custom hook series."""

    rows: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    seed: Optional[int] = None
    final_z: Optional[np.ndarray] = None

    def series(self, name):
        if name in self.extra:
            return np.asarray(self.extra[name], dtype=np.float64)
        if name not in ROW_METRICS:
            raise ContractViolation(f"unknown metric {name!r}")
        vals = [getattr(r, name) for r in self.rows]
        if vals and all(v is None for v in vals[1:] or vals):
            raise ContractViolation(f"metric {name!r} was not recorded")
        # the averaged iterate does not exist at epoch 0
        return np.array([np.nan if v is None else v for v in vals], dtype=np.float64)

    def __len__(self):
        return len(self.rows)


def relative_error(problem, z, z0):
    denom = problem.dist_sq(z0)
    if denom <= 0.0:
        raise ContractViolation("relative error undefined: z_0 lies in the solution set")
    return problem.dist_sq(z) / denom


def grad_norm_sq(problem, z):
    g = problem.mean_value(np.asarray(z, dtype=np.float64))
    return float(g @ g)


def component_variance(problem, z):
    """``(1/n) sum_i ||F_i(z) - F(z)||^2``."""
    z = np.asarray(z, dtype=np.float64)
    dev = problem.component_values(z) - problem.mean_value(z)
    return float(np.einsum("ij,ij->", dev, dev)) / problem.n


def variance_bound_residual(problem, z):
    """Slack ``A ||z - z*||^2 + 2 sigma*^2 - (1/n) sum_i ||F_i(z) - F(z)||^2``.

    ``z*`` is the point at which ``sigma*^2`` is evaluated (the minimum-norm
    solution), so the bound holds with that point even when solutions are not
    unique.
    """
    c = problem.constants
    diff = np.asarray(z, dtype=np.float64) - problem.solution.point
    rhs = c.A * float(diff @ diff) + 2.0 * c.sigma_star_sq
    return rhs - component_variance(problem, z)


def plateau_estimate(values):
    """Median of the last 10% of a metric series (a record or an array)."""
    if isinstance(values, TrajectoryRecord):
        values = values.series("relative_error")
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size < PLATEAU_MIN_LENGTH:
        raise ParameterError(
            f"plateau needs a series of at least {PLATEAU_MIN_LENGTH} entries, got {values.size}"
        )
    tail = max(1, int(round(PLATEAU_FRACTION * values.size)))
    return float(np.median(values[-tail:]))


def log_log_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    dx = lx - lx.mean()
    return float(dx @ (ly - ly.mean()) / (dx @ dx))
