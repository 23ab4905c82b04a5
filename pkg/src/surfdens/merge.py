"""Bottom-up dyadic merging of sample blocks and the resulting estimator.

At step i the index range is cut into groups of 2**i consecutive order
statistics.  Within a group the current partition is a set of dyadic blocks;
the group is collapsed to a single block when no coarsening of that partition
shows more l1 disagreement with the group's own fit than its square-root mass
penalty allows.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .interp import MAX_FIT_DEGREE, DyadicFits, int_fit, rd_constant
from .polynomial import Piece, PiecewiseEstimate, Polynomial, l1_between
from .samples import EmpiricalDistribution, Interval, SortedSamples, is_power_of_two

DEFAULT_ALPHA = 0.25
THEORY_ALPHA = 4.5


@dataclass
class SurfConfig:
    degree: int = 1
    alpha: float = DEFAULT_ALPHA
    delta: float = 0.1
    epsilon: float | None = None
    seed: int | None = None
    jobs: int = 1
    halt_t: int | None = None
    raw_mass: bool = False
    log_base: float = 10.0

    def __post_init__(self):
        if not 0 <= self.degree <= MAX_FIT_DEGREE:
            raise ValueError(f"degree must be ≤ {MAX_FIT_DEGREE}, got {self.degree}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if not self.log_base > 1:
            raise ValueError("log_base must exceed 1")
        if self.halt_t is not None and not is_power_of_two(self.halt_t):
            raise ValueError(f"halt_t must be a power of two, got {self.halt_t}")

    def epsilon_for(self, n: int) -> float:
        if self.epsilon is not None:
            return self.epsilon
        return math.sqrt(5.0 * math.log(n / self.delta, self.log_base) / n)

    def gamma_for(self, n: int) -> float:
        return self.alpha * rd_constant(self.degree) * self.epsilon_for(n) * math.sqrt(self.degree + 1)


def lambda_penalty(dist: EmpiricalDistribution, gamma: float) -> float:
    total = dist.total
    return gamma * sum(math.sqrt(m / total) for m in dist)


def group_gamma(gamma: float, size: int, n: int) -> float:
    """Penalty scale for a group of ``size`` slots: gamma * sqrt(size / n).

    With this scale a piece of absolute mass p is charged gamma * sqrt(p).
    """
    return gamma * math.sqrt(size / n)


class FitCache:
    """INT fits keyed by (a, b, d); zero-length intervals map to None."""

    def __init__(self, s: SortedSamples, d: int, raw_mass: bool = False):
        self.s, self.d, self.raw_mass = s, d, raw_mass
        self._fits: dict[tuple, Polynomial | None] = {}

    def get(self, a: int, b: int) -> Polynomial | None:
        key = (a, b, self.d)
        if key not in self._fits:
            iv = self.s.interval(a, b)
            self._fits[key] = int_fit(iv, self.s, self.d, raw_mass=self.raw_mass) if iv.length > 0 else None
        return self._fits[key]

    def gap(self, a: int, b: int, fhat: Polynomial) -> float:
        """l1 distance on block ``(a, b)`` between its own fit and ``fhat``."""
        fit = self.get(a, b)
        if fit is None:
            return 0.0
        iv = self.s.interval(a, b)
        return l1_between(fit, fhat, iv.lo, iv.hi)


def comp(fhat: Polynomial, cells: Sequence[Interval], dist: EmpiricalDistribution, s: SortedSamples,
         d: int, gamma: float, cache: FitCache | None = None) -> float:
    """Largest fit gain minus sqrt-mass penalty over the dyadic coarsenings of ``dist``.

    The node term is the l1 gap between the fit on the union of ``cells`` and
    ``fhat``, less ``gamma``; halves recurse with gamma / sqrt(2).
    """
    if len(cells) != len(dist):
        raise ValueError("cells and masses differ in length")
    if dist.total != 1:
        raise ValueError(f"masses must be normalised, got total {dist.total}")
    cache = cache or FitCache(s, d)
    for left, right in zip(cells[:-1], cells[1:]):
        if left.hi_index != right.lo_index:
            raise ValueError("cells are not contiguous")
    value = cache.gap(cells[0].lo_index, cells[-1].hi_index, fhat) - gamma
    if len(cells) == 1:
        return value
    cum = dist.cumulative()
    try:
        half = cum.index(Fraction(1, 2))
    except ValueError:
        raise ValueError(f"masses {dist} cannot be split into dyadic halves") from None
    sub = gamma / math.sqrt(2.0)
    left = comp(fhat, cells[:half], EmpiricalDistribution(dist[:half]).scaled(2), s, d, sub, cache)
    right = comp(fhat, cells[half:], EmpiricalDistribution(dist[half:]).scaled(2), s, d, sub, cache)
    return max(value, left + right)


@dataclass
class MergeState:
    """Partition held after ``step`` rounds; ``levels[slot]`` is log2 of the block containing it."""

    step: int
    levels: np.ndarray
    n: int

    def blocks(self) -> list[tuple[int, int]]:
        out, a = [], 0
        while a < self.n:
            size = 1 << int(self.levels[a])
            out.append((a, a + size))
            a += size
        return out

    def distribution(self) -> EmpiricalDistribution:
        return EmpiricalDistribution(Fraction(b - a, self.n) for a, b in self.blocks())

    def refines_uniform(self) -> bool:
        """True when every block fits inside a block of the uniform partition at this step."""
        return bool(np.all(self.levels <= self.step)) and all(
            a % (b - a) == 0 for a, b in self.blocks())


class _Merger:
    def __init__(self, s: SortedSamples, cfg: SurfConfig):
        self.s, self.cfg = s, cfg
        self.gamma = cfg.gamma_for(s.n)
        self.fits = DyadicFits(s, cfg.degree, raw_mass=cfg.raw_mass)
        self.levels = np.zeros(s.n, dtype=np.int64)
        self.pool = ThreadPoolExecutor(cfg.jobs) if cfg.jobs > 1 else None
        self.comp_calls = 0

    def _gaps(self, rows, own, anc, other, shift, slope):
        out = np.empty(rows.size)
        if self.pool is None or rows.size < 4096:
            _kernels.gap_batch(rows, own, anc, other, shift, slope, out)
            return out
        bounds = np.linspace(0, rows.size, self.cfg.jobs + 1).astype(int)
        futures = [
            self.pool.submit(_kernels.gap_batch, rows[a:b], own, anc[a:b], other, shift[a:b], slope[a:b], out[a:b])
            for a, b in zip(bounds[:-1], bounds[1:])]
        for fut in futures:
            fut.result()
        return out

    def step(self, i: int) -> np.ndarray:
        """Run the comparisons of step i; returns the per-group comp values."""
        g_coeffs, g_lo, g_len = self.fits.level(i)
        gamma = group_gamma(self.gamma, 1 << i, self.s.n)
        below = None
        for k in range(i + 1):
            size = 1 << k
            lev = self.levels[::size]
            active = lev <= k
            is_cell = lev == k
            rows = np.flatnonzero(active)
            if k == i:
                values = np.full(rows.size, -gamma)
            else:
                coeffs, lo, length = self.fits.level(k)
                anc = rows >> (i - k)
                glen = g_len[anc]
                safe = np.where(glen > 0, glen, 1.0)
                slope = np.where(glen > 0, length[rows] / safe, 0.0)
                shift = (lo[rows] - g_lo[anc]) / safe
                gaps = self._gaps(rows, coeffs, anc, g_coeffs, shift, slope)
                values = gaps - gamma * 2.0 ** ((k - i) / 2.0)
            level_vals = np.zeros(lev.size)
            level_vals[rows] = values
            if below is not None:
                split = below[0::2] + below[1::2]
                inner = active & ~is_cell
                level_vals[inner] = np.maximum(level_vals[inner], split[inner])
            below = level_vals
        self.comp_calls += below.size
        return below

    def run(self, steps: int, on_step: Callable[[MergeState], None] | None = None) -> MergeState:
        try:
            for i in range(1, steps + 1):
                values = self.step(i)
                merged = np.flatnonzero(values <= 0.0)
                if merged.size:
                    span = 1 << i
                    slots = (merged[:, None] * span + np.arange(span)).ravel()
                    self.levels[slots] = i
                if on_step is not None:
                    on_step(MergeState(i, self.levels.copy(), self.s.n))
        finally:
            if self.pool is not None:
                self.pool.shutdown()
        return MergeState(steps, self.levels.copy(), self.s.n)


def _steps(s: SortedSamples, cfg: SurfConfig) -> int:
    if s.n < 2:
        raise ValueError("need n >= 2")
    if cfg.halt_t is None:
        return s.depth
    if not cfg.halt_t < s.n:
        raise ValueError(f"halt_t={cfg.halt_t} must be below n={s.n}")
    return s.depth - (cfg.halt_t.bit_length() - 1)


def merge_state(s: SortedSamples, cfg: SurfConfig, on_step=None) -> tuple[MergeState, _Merger]:
    merger = _Merger(s, cfg)
    return merger.run(_steps(s, cfg), on_step), merger


def merge(s: SortedSamples, cfg: SurfConfig, on_step=None) -> EmpiricalDistribution:
    """Final binary distribution after all (or ``D - log2 halt_t``) merge steps."""
    state, _ = merge_state(s, cfg, on_step)
    return state.distribution()


def surf(s: SortedSamples, cfg: SurfConfig, on_step=None) -> PiecewiseEstimate:
    """Piecewise INT fit on the partition chosen by merging."""
    started = time.perf_counter()
    state, merger = merge_state(s, cfg, on_step)
    pieces = []
    for a, b in state.blocks():
        k = (b - a).bit_length() - 1
        poly = merger.fits.polynomial(k, a >> k)
        if poly is not None:
            pieces.append(Piece(s.boundary(a), s.boundary(b), poly, a, b))
    if not pieces:
        raise ValueError("samples have no spread: every interval has zero length")
    meta = {
        "n": s.n,
        "gamma": merger.gamma,
        "epsilon": cfg.epsilon_for(s.n),
        "config": {k: v for k, v in asdict(cfg).items() if k not in ("jobs",)},
        "masses": [str(m) for m in state.distribution()],
        "seconds": time.perf_counter() - started,
    }
    return PiecewiseEstimate(tuple(pieces), s.hull, cfg.degree, meta)


def surf_halted(s: SortedSamples, cfg: SurfConfig, t: int) -> PiecewiseEstimate:
    if not is_power_of_two(t) or not t < s.n:
        raise ValueError(f"t must be a power of two below n={s.n}, got {t}")
    cfg = SurfConfig(**{**asdict(cfg), "halt_t": t})
    return surf(s, cfg)
