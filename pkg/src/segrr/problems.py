"""Finite-sum affine variational inequality problems.

A problem is a list of ``n`` affine component operators ``F_i(z) = Q_i z + b_i``
whose mean ``F`` is monotone. Generators cover the quadratic strongly-convex /
strongly-concave game, the bilinear zero-sum game and the linear WGAN toy used
in the experiments; anything else can be passed in as ``explicit-affine``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from . import linalg
from .errors import ContractViolation, InfeasibleError, ParameterError, ValidationError
from .rng import Xoshiro256

STRONGLY_MONOTONE = "strongly-monotone"
AFFINE_MONOTONE = "affine-monotone"
MONOTONE = "monotone"
PROBLEM_CLASSES = (STRONGLY_MONOTONE, AFFINE_MONOTONE, MONOTONE)

GENERATORS = ("quadratic-scsc", "bilinear", "wgan-toy", "explicit-affine")

MONOTONE_ATOL = 1e-9
STRONG_RTOL = 1e-6
RESIDUAL_RTOL = 1e-8


@dataclass(frozen=True)
class AffineComponent:
    Q: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class ProblemConstants:
    L_i: np.ndarray
    L_max: float
    L: float
    mu: float
    lambda_min_plus: Optional[float]  # None for the all-zero operator
    A: float
    sigma_star_sq: float
    kappa: Optional[float]  # None unless mu > 0

    @classmethod
    def manual(cls, L_max, mu=0.0, lambda_min_plus=None, L=None, A=None, sigma_star_sq=0.0):
        """Constants supplied by hand, e.g. for the step-size calculator."""
        L_max = float(L_max)
        mu = float(mu)
        return cls(
            L_i=np.array([L_max]),
            L_max=L_max,
            L=L_max if L is None else float(L),
            mu=mu,
            lambda_min_plus=lambda_min_plus,
            A=2.0 * L_max ** 2 if A is None else float(A),
            sigma_star_sq=float(sigma_star_sq),
            kappa=L_max / mu if mu > 0 else None,
        )


@dataclass(frozen=True)
class SolutionSet:
    """Solutions of ``mean(Q) z = -mean(b)``.

    ``point`` is the minimum-norm solution. When the mean matrix is singular the
    set is ``point + null(mean Q)``; ``row_basis`` spans the orthogonal
    complement of that null space, so distances only see those directions.
    """

    point: np.ndarray
    row_basis: np.ndarray
    rank: int

    @property
    def unique(self):
        return self.rank == self.point.shape[0]

    def dist_sq(self, z):
        diff = np.asarray(z, dtype=np.float64) - self.point
        if self.unique:
            return float(diff @ diff)
        proj = self.row_basis.T @ diff
        return float(proj @ proj)


class FiniteSumProblem:
    """Immutable finite-sum affine VIP; share freely across runs."""

    def __init__(self, Q, b, kind=None, generator="explicit-affine", seed=None,
                 params=None, declared_mu=None):
        Q = np.array(Q, dtype=np.float64)
        b = np.array(b, dtype=np.float64)
        if Q.ndim != 3 or Q.shape[1] != Q.shape[2]:
            raise ContractViolation(f"Q must have shape (n, d, d), got {Q.shape}")
        if b.shape != Q.shape[:2]:
            raise ContractViolation(f"b must have shape {Q.shape[:2]}, got {b.shape}")
        if Q.shape[0] < 1 or Q.shape[1] < 1:
            raise ContractViolation("need at least one component of dimension >= 1")
        if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(b))):
            raise ContractViolation("component data has non-finite entries")
        Q.setflags(write=False)
        b.setflags(write=False)
        self.Q = Q
        self.b = b
        # per-component views; indexing a list is cheaper than slicing the stack
        self._Q_rows = list(Q)
        self._b_rows = list(b)
        self.n, self.d = Q.shape[0], Q.shape[1]
        self.generator = generator
        self.seed = seed
        self.params = params or {}

        sym_min = self.symmetric_min_eigenvalue
        scale = max(1.0, float(np.linalg.norm(self.mean_matrix)))
        if sym_min < -MONOTONE_ATOL * scale:
            raise ValidationError(
                f"mean operator is not monotone: symmetric part has eigenvalue {sym_min:.6g}"
            )
        if declared_mu is not None and sym_min < declared_mu * (1 - STRONG_RTOL):
            raise ValidationError(
                f"declared strong monotonicity {declared_mu} but symmetric part has "
                f"minimum eigenvalue {sym_min:.6g}"
            )
        if kind is None:
            kind = STRONGLY_MONOTONE if sym_min > MONOTONE_ATOL * scale else AFFINE_MONOTONE
        if kind not in PROBLEM_CLASSES:
            raise ParameterError(f"unknown problem class {kind!r}")
        if kind == STRONGLY_MONOTONE and sym_min <= 0.0:
            raise ValidationError(
                f"class strongly-monotone but symmetric part has eigenvalue {sym_min:.6g}"
            )
        self.kind = kind

    def __repr__(self):
        return f"FiniteSumProblem(generator={self.generator!r}, kind={self.kind!r}, n={self.n}, d={self.d})"

    @property
    def components(self):
        return [AffineComponent(self.Q[i], self.b[i]) for i in range(self.n)]

    # Evaluation. Means are accumulated left to right over components so that
    # full evaluations are bit-identical to averaging component evaluations.

    def component_value(self, i, z):
        """``F_i(z)`` without argument checks (solver hot path)."""
        return self._Q_rows[i] @ z + self._b_rows[i]

    def evaluate(self, z, index=None):
        z = linalg.as_vector(z, "z")
        if z.shape[0] != self.d:
            raise ContractViolation(f"z has dimension {z.shape[0]}, problem has {self.d}")
        if index is not None:
            if not 0 <= index < self.n:
                raise ContractViolation(f"component index {index} outside [0, {self.n})")
            return self.component_value(index, z)
        return self.mean_value(z)

    def mean_value(self, z):
        # np.add.reduce over the leading axis adds rows strictly in index order
        return np.add.reduce(self.component_values(z), axis=0) / self.n

    def component_values(self, z):
        """All ``F_i(z)`` stacked as an ``(n, d)`` array."""
        return self.Q @ z + self.b

    @cached_property
    def mean_matrix(self):
        acc = np.zeros((self.d, self.d))
        for i in range(self.n):
            acc = acc + self.Q[i]
        return acc / self.n

    @cached_property
    def mean_offset(self):
        acc = np.zeros(self.d)
        for i in range(self.n):
            acc = acc + self.b[i]
        return acc / self.n

    @cached_property
    def symmetric_min_eigenvalue(self):
        Qbar = self.mean_matrix
        w, _ = linalg.sym_eigen(0.5 * (Qbar + Qbar.T))
        return float(w[0])

    @cached_property
    def _mean_svd(self):
        return linalg.truncated_svd(self.mean_matrix)

    @cached_property
    def solution(self):
        s, U, V = self._mean_svd
        rhs = -self.mean_offset
        point = V @ ((U.T @ rhs) / s) if s.size else np.zeros(self.d)
        residual = float(np.linalg.norm(self.mean_matrix @ point + self.mean_offset))
        tol = RESIDUAL_RTOL * max(
            float(np.linalg.norm(self.mean_offset)),
            (float(s[0]) if s.size else 0.0) * float(np.linalg.norm(point)),
            np.finfo(float).tiny,
        )
        if residual > tol:
            raise InfeasibleError(f"mean operator has no zero: best residual {residual:.3e}")
        point.setflags(write=False)
        return SolutionSet(point=point, row_basis=V, rank=int(s.size))

    def dist_sq(self, z):
        return self.solution.dist_sq(z)

    @cached_property
    def constants(self):
        L_i = linalg.spectral_norms(self.Q)
        s_all = linalg.singular_values(self.mean_matrix)
        s_kept, _, _ = self._mean_svd
        L = float(s_all[0])
        mu = max(self.symmetric_min_eigenvalue, 0.0)
        lam = float(s_kept[-1]) if s_kept.size else None
        z_star = self.solution.point
        F_star = self.component_values(z_star)
        sigma_sq = float(np.mean(np.einsum("ij,ij->i", F_star, F_star)))
        L_max = float(np.max(L_i))
        return ProblemConstants(
            L_i=L_i,
            L_max=L_max,
            L=L,
            mu=mu,
            lambda_min_plus=lam,
            A=float(2.0 * np.mean(L_i ** 2)),
            sigma_star_sq=sigma_sq,
            kappa=L_max / mu if mu > 0 else None,
        )

    def component_min_sym_eigenvalues(self):
        """Smallest eigenvalue of each component's symmetric part."""
        sym = 0.5 * (self.Q + self.Q.transpose(0, 2, 1))
        w, _ = linalg.sym_eigen_batch(sym)
        return w[:, 0]

    # Serialisation.

    def to_dict(self):
        return {
            "kind": self.generator,
            "class": self.kind,
            "d": self.d,
            "n": self.n,
            "seed": self.seed,
            "params": _jsonable(self.params),
            "components": [
                {"Q": self.Q[i].tolist(), "b": self.b[i].tolist()} for i in range(self.n)
            ],
        }

    def to_json(self):
        # json writes floats with repr(), the shortest string that round-trips exactly
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data):
        comps = data["components"]
        Q = np.array([c["Q"] for c in comps], dtype=np.float64)
        b = np.array([c["b"] for c in comps], dtype=np.float64)
        n, d = int(data["n"]), int(data["d"])
        if Q.shape != (n, d, d):
            raise ContractViolation(f"components have shape {Q.shape}, header says n={n}, d={d}")
        return cls(Q, b, kind=data.get("class"), generator=data.get("kind", "explicit-affine"),
                   seed=data.get("seed"), params=data.get("params"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _require(params, keys, kind):
    missing = [k for k in keys if k not in params]
    if missing:
        raise ParameterError(f"{kind} needs parameters {missing}")


def _quadratic_scsc(params, rng):
    _require(params, ("n", "d", "mu", "L"), "quadratic-scsc")
    n, d = int(params["n"]), int(params["d"])
    mu, L = float(params["mu"]), float(params["L"])
    coupling = float(params.get("coupling", 0.1))
    linear = float(params.get("linear_scale", 1.0))
    if n < 1 or d < 1:
        raise ParameterError("n and d must be positive")
    if not 0 < mu <= L:
        raise ParameterError(f"need 0 < mu <= L, got mu={mu}, L={L}")
    P = linalg.random_orthogonal(d, rng)
    Q = np.zeros((n, 2 * d, 2 * d))
    b = np.zeros((n, 2 * d))
    for i in range(n):
        A = (P * rng.uniforms(d, mu, L)) @ P.T
        B = (P * rng.uniforms(d, 0.0, coupling)) @ P.T
        C = (P * rng.uniforms(d, mu, L)) @ P.T
        a = np.array(rng.normals(d)) * linear
        c = np.array(rng.normals(d)) * linear
        # F = (grad_x f, -grad_y f) of x'Ax/2 + x'By - y'Cy/2 + a'x - c'y
        Q[i, :d, :d] = A
        Q[i, :d, d:] = B
        Q[i, d:, :d] = -B.T
        Q[i, d:, d:] = C
        b[i, :d] = a
        b[i, d:] = c
    return Q, b, STRONGLY_MONOTONE, mu


def _bilinear(params, rng):
    _require(params, ("n", "d", "lambda_min_plus", "L_max"), "bilinear")
    n, d = int(params["n"]), int(params["d"])
    lam, lmax = float(params["lambda_min_plus"]), float(params["L_max"])
    linear = float(params.get("linear_scale", 1.0))
    if n < 1 or d < 1:
        raise ParameterError("n and d must be positive")
    if not 0 < lam <= lmax:
        raise ParameterError(f"need 0 < lambda_min_plus <= L_max, got {lam}, {lmax}")
    P = linalg.random_orthogonal(d, rng)
    Q = np.zeros((n, 2 * d, 2 * d))
    b = np.zeros((n, 2 * d))
    for i in range(n):
        B = (P * rng.uniforms(d, lam, lmax)) @ P.T
        Q[i, :d, d:] = B
        Q[i, d:, :d] = -B.T
        b[i, :d] = np.array(rng.normals(d)) * linear
        b[i, d:] = np.array(rng.normals(d)) * linear
    return Q, b, AFFINE_MONOTONE, None


def _wgan_toy(params, rng):
    """Linear critic ``<w, x>`` against generator ``z + theta``; z = (theta, w)."""
    _require(params, ("d", "n", "mean", "scale"), "wgan-toy")
    d, n = int(params["d"]), int(params["n"])
    mean = np.asarray(params["mean"], dtype=np.float64)
    scale = float(params["scale"])
    if mean.shape != (d,):
        raise ParameterError(f"mean must have length d={d}")
    if scale < 0 or n < 1 or d < 1:
        raise ParameterError("need scale >= 0 and positive n, d")
    std = math.sqrt(scale)
    Q = np.zeros((n, 2 * d, 2 * d))
    b = np.zeros((n, 2 * d))
    eye = np.eye(d)
    for j in range(n):
        x = mean + std * np.array(rng.normals(d))
        noise = std * np.array(rng.normals(d))
        Q[j, :d, d:] = -eye
        Q[j, d:, :d] = eye
        b[j, d:] = -(x - noise)
    return Q, b, AFFINE_MONOTONE, None


def _explicit(params):
    comps = params.get("components")
    if not comps:
        raise ParameterError("explicit-affine needs a non-empty 'components' list")
    Q = np.array([c["Q"] for c in comps], dtype=np.float64)
    b = np.array([c["b"] for c in comps], dtype=np.float64)
    return Q, b, params.get("class"), None


def generate_problem(kind, params, seed=0):
    """Build a :class:`FiniteSumProblem`; deterministic given ``seed``."""
    params = dict(params)
    if kind == "explicit-affine":
        Q, b, cls, declared = _explicit(params)
        params = {}
    else:
        rng = Xoshiro256(seed)
        if kind == "quadratic-scsc":
            Q, b, cls, declared = _quadratic_scsc(params, rng)
        elif kind == "bilinear":
            Q, b, cls, declared = _bilinear(params, rng)
        elif kind == "wgan-toy":
            Q, b, cls, declared = _wgan_toy(params, rng)
        else:
            raise ParameterError(f"unknown problem kind {kind!r}; expected one of {GENERATORS}")
    return FiniteSumProblem(Q, b, kind=cls, generator=kind, seed=seed,
                            params=_jsonable(params), declared_mu=declared)


def scalar_problem(offsets, slope=1.0):
    """One-dimensional components ``F_i(z) = slope * z + offsets[i]``; handy in tests."""
    offsets = np.asarray(offsets, dtype=np.float64)
    Q = np.full((offsets.size, 1, 1), float(slope))
    return FiniteSumProblem(Q, offsets[:, None])


def initial_point(d, kind="normal", seed=0, scale=1.0, values=None):
    """Starting point: ``zeros``, seeded ``normal`` (scaled) or ``explicit`` values."""
    if kind == "zeros":
        return np.zeros(d)
    if kind == "normal":
        return float(scale) * np.array(Xoshiro256(seed).normals(d))
    if kind == "explicit":
        z = np.asarray(values, dtype=np.float64)
        if z.shape != (d,):
            raise ParameterError(f"explicit initial point must have length {d}")
        return z
    raise ParameterError(f"unknown initial point kind {kind!r}")
