"""Per-epoch component orders for the four sampling regimes."""
from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import ContractViolation, InfeasibleError, ParameterError
from .rng import Xoshiro256

RR = "RR"
SO = "SO"
IEG = "IEG"
UNIFORM = "Uniform"
REGIMES = (RR, SO, IEG, UNIFORM)

ENUMERATION_LIMIT = 8


class SamplingStrategy:
    """Stateful generator of epoch orders.

    RR and Uniform consume the generator once per epoch, so epochs must be
    requested as ``0, 1, 2, ...``; asking for the same epoch again returns the
    cached order. SO draws its permutation at construction and IEG is the
    identity, so both accept any epoch.
    """

    def __init__(self, regime, n, seed=0):
        if regime not in REGIMES:
            raise ParameterError(f"unknown sampling regime {regime!r}; expected one of {REGIMES}")
        if n < 1:
            raise ParameterError(f"n must be >= 1, got {n}")
        self.regime = regime
        self.n = int(n)
        self.seed = seed
        self._rng = Xoshiro256(seed)
        self._next_epoch = 0
        self._last = None
        self.frozen_permutation = None
        if regime == SO:
            self.frozen_permutation = tuple(self._rng.permutation(self.n))

    def epoch_order(self, k):
        if k < 0:
            raise ContractViolation(f"epoch must be >= 0, got {k}")
        if self.regime == IEG:
            return list(range(self.n))
        if self.regime == SO:
            return list(self.frozen_permutation)
        if k == self._next_epoch - 1 and self._last is not None:
            return list(self._last)
        if k != self._next_epoch:
            raise ContractViolation(
                f"{self.regime} orders must be drawn sequentially: expected epoch "
                f"{self._next_epoch}, got {k}"
            )
        if self.regime == RR:
            order = self._rng.permutation(self.n)
        else:
            order = [self._rng.below(self.n) for _ in range(self.n)]
        self._next_epoch += 1
        self._last = tuple(order)
        return order


def _population(vectors):
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ContractViolation("vectors must be a list of equal-length vectors")
    return X


def _check_sample_size(n, d):
    if n < 2:
        raise ParameterError(f"need a population of at least 2 vectors, got {n}")
    if not 1 <= d <= n:
        raise ParameterError(f"sample size must lie in [1, {n}], got {d}")


def wr_sample_variance(vectors, d):
    """Exact ``E||mean of d draws without replacement - population mean||^2``."""
    X = _population(vectors)
    n = X.shape[0]
    _check_sample_size(n, d)
    dev = X - X.mean(axis=0)
    sigma_sq = float(np.einsum("ij,ij->", dev, dev)) / n
    return (n - d) / (d * (n - 1)) * sigma_sq


def wr_sample_variance_enumerated(vectors, d):
    """Brute-force counterpart of :func:`wr_sample_variance` over all subsets."""
    X = _population(vectors)
    n = X.shape[0]
    if n > ENUMERATION_LIMIT:
        raise InfeasibleError(f"enumeration limited to n <= {ENUMERATION_LIMIT}, got {n}")
    _check_sample_size(n, d)
    mu = X.mean(axis=0)
    total = 0.0
    for subset in itertools.combinations(range(n), d):
        diff = X[list(subset)].mean(axis=0) - mu
        total += float(diff @ diff)
    return total / math.comb(n, d)
