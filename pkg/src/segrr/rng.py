"""Portable seeded random numbers.

Generator: xoshiro256** (Blackman & Vigna), state seeded by four successive
outputs of splitmix64 applied to the 64-bit seed. Doubles use the top 53 bits,
bounded integers use rejection sampling (no modulo bias) and normals use the
Box-Muller transform with the second variate cached. The algorithm is part of
the reproducibility contract of every experiment: do not change it silently.
"""
from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
_TWO_53 = 1.0 / (1 << 53)


def splitmix64(x):
    """One splitmix64 step. Returns ``(new_state, output)``."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return x, z ^ (z >> 31)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** generator. Not thread-safe; one instance per run."""

    def __init__(self, seed):
        seed = int(seed) & MASK64
        s = []
        for _ in range(4):
            seed, out = splitmix64(seed)
            s.append(out)
        self._s = s
        self._spare = None

    def state(self):
        return tuple(self._s), self._spare

    def next_u64(self):
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self):
        """Uniform double in ``[0, 1)``."""
        return (self.next_u64() >> 11) * _TWO_53

    def uniform(self, low, high):
        return low + (high - low) * self.random()

    def below(self, bound):
        """Uniform integer in ``[0, bound)`` by rejection."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % bound

    def normal(self):
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = 1.0 - self.random()  # (0, 1]
        u2 = self.random()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def normals(self, count):
        return [self.normal() for _ in range(count)]

    def uniforms(self, count, low=0.0, high=1.0):
        return [self.uniform(low, high) for _ in range(count)]

    def permutation(self, n):
        """Inside-out Fisher-Yates permutation of ``range(n)``."""
        a = []
        for i in range(n):
            j = self.below(i + 1)
            if j == i:
                a.append(i)
            else:
                a.append(a[j])
                a[j] = i
        return a
