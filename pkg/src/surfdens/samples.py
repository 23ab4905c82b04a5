"""Order statistics, sample-delimited intervals and empirical distributions.

Indices follow the order-statistic convention: ``X_(k)`` is the k-th smallest
sample for ``1 <= k <= n-1`` and is stored at ``values[k - 1]``.  Block
``(a, b)`` runs from ``X_(a)`` to ``X_(b)``; the two unbounded ends are cut
at the sample hull ``[X_(1), X_(n-1)]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class SortedSamples:
    """The n-1 increasingly sorted samples behind every interval boundary."""

    values: np.ndarray
    n: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not is_power_of_two(self.n):
            raise ValueError(f"n must be a power of two, got {self.n}")
        if values.ndim != 1 or values.size != self.n - 1:
            raise ValueError(f"expected {self.n - 1} values for n={self.n}, got {values.size}")
        if values.size > 1 and np.any(np.diff(values) < 0):
            raise ValueError("values must be sorted ascending")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def depth(self) -> int:
        """D = log2(n)."""
        return self.n.bit_length() - 1

    @property
    def hull(self) -> tuple[float, float]:
        return float(self.values[0]), float(self.values[-1])

    def boundary(self, index: int) -> float:
        """Real position of interval boundary ``index`` in 0..n."""
        if not 0 <= index <= self.n:
            raise IndexError(index)
        return float(self.values[min(max(index - 1, 0), self.n - 2)])

    def boundaries(self, index: np.ndarray) -> np.ndarray:
        return self.values[np.clip(np.asarray(index) - 1, 0, self.n - 2)]

    def interval(self, a: int, b: int) -> "Interval":
        if not 0 <= a < b <= self.n:
            raise ValueError(f"need 0 <= a < b <= n, got a={a}, b={b}, n={self.n}")
        return Interval(a, b, self.boundary(a), self.boundary(b), closed=(b == self.n))

    def members(self, a: int, b: int) -> np.ndarray:
        """Samples ``X_(k)`` with ``max(a, 1) <= k < b``, i.e. those inside block ``(a, b)``."""
        return self.values[max(a - 1, 0): b - 1]


@dataclass(frozen=True)
class Interval:
    """Block ``(a, b)``: half-open [lo, hi) unless it is the last interval of the hull."""

    lo_index: int
    hi_index: int
    lo: float
    hi: float
    closed: bool = False

    def __post_init__(self):
        if not 0 <= self.lo_index < self.hi_index:
            raise ValueError("interval indices must satisfy 0 <= a < b")
        if self.hi < self.lo:
            raise ValueError("interval bounds out of order")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x < self.hi or (self.closed and x == self.hi)


def sort_samples(raw: Sequence[float], n: int) -> SortedSamples:
    """Sort ``raw`` and keep the first n-1 values (the caller subsamples if needed)."""
    if not is_power_of_two(n):
        raise ValueError(f"n must be a power of two, got {n}")
    raw = np.asarray(raw, dtype=float).ravel()
    if raw.size < n - 1:
        raise ValueError(f"need at least {n - 1} samples for n={n}, got {raw.size}")
    return SortedSamples(np.sort(raw[: n - 1]), n)


def largest_budget(count: int) -> int:
    """Largest power of two n with n - 1 <= count."""
    if count < 1:
        raise ValueError("need at least one sample")
    return 1 << (count + 1).bit_length() - 1


def subsample(raw: Sequence[float], seed=None) -> SortedSamples:
    """Use the largest power-of-two budget, dropping the excess uniformly at random."""
    raw = np.asarray(raw, dtype=float).ravel()
    n = largest_budget(raw.size)
    if raw.size > n - 1:
        rng = np.random.default_rng(seed)
        raw = raw[np.sort(rng.choice(raw.size, n - 1, replace=False))]
    return sort_samples(raw, n)


def empirical_mass(a: int, b: int, s: SortedSamples) -> Fraction:
    if not 0 <= a < b <= s.n:
        raise ValueError(f"need 0 <= a < b <= n, got a={a}, b={b}")
    return Fraction(b - a, s.n)


class EmpiricalDistribution(tuple):
    """Ordered interval masses, each a positive multiple of 1/n held exactly."""

    def __new__(cls, masses: Iterable):
        masses = tuple(Fraction(m) for m in masses)
        if not masses:
            raise ValueError("empty distribution")
        if any(m <= 0 for m in masses):
            raise ValueError("masses must be positive")
        return super().__new__(cls, masses)

    @property
    def total(self) -> Fraction:
        return sum(self, Fraction(0))

    @property
    def is_binary(self) -> bool:
        return all(m.numerator == 1 and is_power_of_two(m.denominator) for m in self)

    def cumulative(self) -> list[Fraction]:
        out, run = [Fraction(0)], Fraction(0)
        for m in self:
            run += m
            out.append(run)
        return out

    def index_bounds(self, n: int) -> list[int]:
        """Boundary indices r_i * n, checked to be integers."""
        bounds = []
        for c in self.cumulative():
            scaled = c * n
            if scaled.denominator != 1:
                raise ValueError(f"cumulative mass {c} is not a multiple of 1/{n}")
            bounds.append(int(scaled))
        return bounds

    def scaled(self, factor) -> "EmpiricalDistribution":
        return EmpiricalDistribution(m * factor for m in self)

    def __repr__(self):
        return "EmpiricalDistribution(" + ", ".join(str(m) for m in self) + ")"


def partition_of(dist: EmpiricalDistribution, s: SortedSamples) -> list[Interval]:
    if dist.total != 1:
        raise ValueError(f"distribution sums to {dist.total}, not 1")
    bounds = dist.index_bounds(s.n)
    return [s.interval(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def binary_decompose(dist: EmpiricalDistribution) -> EmpiricalDistribution:
    """Replace each mass by its binary-expansion terms, largest first."""
    out = []
    for m in dist:
        if not is_power_of_two(m.denominator):
            raise ValueError(f"mass {m} is not dyadic")
        num, den = m.numerator, m.denominator
        for bit in range(num.bit_length() - 1, -1, -1):
            if num >> bit & 1:
                out.append(Fraction(1 << bit, den))
    return EmpiricalDistribution(out)


def refines(fine: EmpiricalDistribution, coarse: EmpiricalDistribution) -> bool:
    """True iff every interval of ``fine`` sits inside one interval of ``coarse``."""
    if fine.total != coarse.total:
        raise ValueError(f"mass totals differ: {fine.total} vs {coarse.total}")
    return set(coarse.cumulative()) <= set(fine.cumulative())


def uniform_binary(parts: int) -> EmpiricalDistribution:
    """The uniform distribution (1/parts, ..., 1/parts)."""
    return EmpiricalDistribution([Fraction(1, parts)] * parts)
