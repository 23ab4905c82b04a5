"""Area-matching polynomial fits on fixed node partitions.

A degree-d fit on an interval is pinned down by its integrals over d+1 cells
of the interval; the cells come from a node partition of [0, 1].  How much the
fit can lose against the best polynomial is governed by the ratio between the
absolute integral of a polynomial and the sum of its absolute cell areas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .polynomial import Polynomial, abs_l1, integrate, rescale_density
from .samples import Interval, SortedSamples

MAX_FIT_DEGREE = 8


class DegeneratePartitionError(ValueError):
    pass


@dataclass(frozen=True)
class NodePartition:
    nodes: tuple
    ratio: float | None = None

    def __post_init__(self):
        nodes = tuple(float(v) for v in self.nodes)
        if len(nodes) < 2 or nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise ValueError(f"node partition must run from 0 to 1, got {nodes}")
        if any(b < a for a, b in zip(nodes[:-1], nodes[1:])):
            raise ValueError(f"nodes must be nondecreasing: {nodes}")
        object.__setattr__(self, "nodes", nodes)

    @property
    def degree(self) -> int:
        return len(self.nodes) - 2

    @property
    def interior(self) -> np.ndarray:
        return np.array(self.nodes[1:-1])

    def cells(self):
        return list(zip(self.nodes[:-1], self.nodes[1:]))


# Published node partitions; the ratios for d >= 4 are upper bounds.
NODE_TABLE = {
    0: NodePartition((0, 1), 1.0),
    1: NodePartition((0, 0.5, 1), 1.25),
    2: NodePartition((0, 0.2599, 0.7401, 1), 1.423),
    3: NodePartition((0, 0.1548, 0.5, 0.8452, 1), 1.559),
    4: NodePartition((0, 0.1015, 0.348, 0.652, 0.8985, 1), 1.675),
    5: NodePartition((0, 0.071, 0.254, 0.5, 0.746, 0.929, 1), 1.774),
    6: NodePartition((0, 0.053, 0.192, 0.390, 0.610, 0.808, 0.947, 1), 1.857),
    7: NodePartition((0, 0.0405, 0.149, 0.310, 0.5, 0.690, 0.851, 0.9595, 1), 1.930),
    8: NodePartition((0, 0.032, 0.119, 0.252, 0.414, 0.586, 0.749, 0.881, 0.968, 1), 1.999),
}


def table_nodes(d: int) -> NodePartition:
    if not 0 <= d <= MAX_FIT_DEGREE:
        raise ValueError(f"degree must be ≤ {MAX_FIT_DEGREE}, got {d}")
    return NODE_TABLE[d]


def moment_matrix(nodes: NodePartition) -> np.ndarray:
    """Row i holds the integrals of 1, x, ..., x^d over cell i."""
    x = np.array(nodes.nodes)
    powers = np.arange(1, nodes.degree + 2)
    upper = x[1:, None] ** powers
    lower = x[:-1, None] ** powers
    return (upper - lower) / powers


def gauss_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ x = b by Gaussian elimination with partial pivoting.

    ``b`` may hold several right-hand sides as columns.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    vector = b.ndim == 1
    if vector:
        b = b[:, None]
    size = a.shape[0]
    scale = np.max(np.abs(a)) if a.size else 0.0
    for col in range(size):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot, col]) <= 1e-14 * scale:
            raise DegeneratePartitionError("singular moment system (repeated nodes?)")
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            b[[col, pivot]] = b[[pivot, col]]
        factors = a[col + 1:, col] / a[col, col]
        a[col + 1:, col:] -= factors[:, None] * a[col, col:]
        b[col + 1:] -= factors[:, None] * b[col]
    x = np.zeros_like(b)
    for row in range(size - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x[:, 0] if vector else x


@lru_cache(maxsize=None)
def _inverse(nodes: NodePartition) -> np.ndarray:
    inv = gauss_solve(moment_matrix(nodes), np.eye(nodes.degree + 1))
    inv.setflags(write=False)
    return inv


def fit_on_unit(masses: Sequence[float], nodes: NodePartition) -> Polynomial:
    """The polynomial on [0, 1] whose integral over cell i equals masses[i]."""
    masses = np.asarray(masses, dtype=float)
    if masses.shape != (nodes.degree + 1,):
        raise ValueError(f"need {nodes.degree + 1} masses, got {masses.size}")
    return Polynomial(gauss_solve(moment_matrix(nodes), masses))


def cell_counts(members: np.ndarray, lo: float, hi: float, nodes: NodePartition) -> np.ndarray:
    """Samples per node cell of [lo, hi]; cells are half-open, the last one closed."""
    cuts = lo + nodes.interior * (hi - lo)
    inner = np.searchsorted(members, cuts, side="left")
    edges = np.concatenate([[0], inner, [members.size]])
    return np.diff(edges)


def int_fit(iv: Interval, s: SortedSamples, d: int, nodes: NodePartition | None = None,
            raw_mass: bool = False) -> Polynomial:
    """INT estimate on ``iv``: add-one cell masses (n_J + 1) / n, fitted and rescaled."""
    if d > MAX_FIT_DEGREE:
        raise ValueError(f"degree must be ≤ {MAX_FIT_DEGREE}, got {d}")
    if not iv.length > 0:
        raise ValueError(f"interval [{iv.lo}, {iv.hi}] has zero length")
    nodes = nodes or table_nodes(d)
    counts = cell_counts(s.members(iv.lo_index, iv.hi_index), iv.lo, iv.hi, nodes)
    masses = (counts + (0 if raw_mass else 1)) / s.n
    return rescale_density(fit_on_unit(masses, nodes), iv.lo, iv.hi)


class DyadicFits:
    """Unit-frame INT coefficients for every dyadic block of the index range.

    Level k holds the n / 2**k blocks ``(j 2^k, (j+1) 2^k)``.  Each level is
    computed once, vectorised, and reused for the whole run.
    """

    def __init__(self, s: SortedSamples, d: int, raw_mass: bool = False, nodes: NodePartition | None = None):
        self.s = s
        self.d = d
        self.nodes = nodes or table_nodes(d)
        self.raw_mass = raw_mass
        self._inv_t = _inverse(self.nodes).T
        self._levels: dict[int, tuple] = {}

    def level(self, k: int):
        """(coeffs, lo, length) arrays for all blocks of size 2**k."""
        if k not in self._levels:
            self._levels[k] = self._compute(k)
        return self._levels[k]

    def _compute(self, k: int):
        s, size = self.s, 1 << k
        a = np.arange(0, s.n, size)
        b = a + size
        lo = s.boundaries(a)
        hi = s.boundaries(b)
        length = hi - lo
        start = np.maximum(a - 1, 0)
        stop = b - 1
        edges = [start]
        for node in self.nodes.interior:
            pos = np.searchsorted(s.values, lo + node * length, side="left")
            edges.append(np.clip(pos, start, stop))
        edges.append(stop)
        counts = np.diff(np.stack(edges, axis=1), axis=1)
        masses = (counts + (0 if self.raw_mass else 1)) / s.n
        coeffs = np.ascontiguousarray(masses @ self._inv_t)
        return coeffs, lo, length

    def polynomial(self, k: int, j: int) -> Polynomial | None:
        coeffs, lo, length = self.level(k)
        if not length[j] > 0:
            return None
        return Polynomial(coeffs[j] / length[j], lo[j], length[j])


def ratio(nodes: NodePartition, h: Polynomial) -> float:
    """Absolute integral of h on [0, 1] over the sum of its absolute cell areas."""
    if h.is_zero():
        raise ValueError("ratio is undefined for the zero polynomial")
    num = abs_l1(h, 0.0, 1.0)
    den = sum(abs(integrate(h, a, b)) for a, b in nodes.cells())
    if den <= 1e-15 * num:
        return math.inf
    return num / den


def extremal_polys(nodes: NodePartition) -> list[Polynomial]:
    """Entry i is monic of degree d with zero area on every cell except cell i."""
    d = nodes.degree
    if any(b <= a for a, b in nodes.cells()):
        raise DegeneratePartitionError(f"cells must have positive length: {nodes.nodes}")
    m = moment_matrix(nodes)
    out = []
    for i in range(d + 1):
        rows = [k for k in range(d + 1) if k != i]
        if d == 0:
            out.append(Polynomial([1.0]))
            continue
        lower = gauss_solve(m[rows][:, :d], -m[rows, d])
        out.append(Polynomial(np.append(lower, 1.0)))
    return out


def ratio_sup(nodes: NodePartition) -> float:
    """Worst-case ratio over all of P_d, attained on the extremal set."""
    return max(ratio(nodes, h) for h in extremal_polys(nodes))


@lru_cache(maxsize=None)
def rd_constant(d: int) -> float:
    """Recomputed ratio of the tabulated partition for degree d."""
    return ratio_sup(table_nodes(d))


def symmetric_nodes(d: int, free: Sequence[float]) -> NodePartition:
    """Partition mirrored about 1/2 from its d // 2 smallest interior nodes."""
    free = sorted(float(v) for v in free)
    middle = [0.5] if d % 2 else []
    return NodePartition((0.0, *free, *middle, *(1.0 - v for v in reversed(free)), 1.0))


def _objective(d: int, free: Sequence[float]) -> float:
    if d == 1:
        nodes = NodePartition((0.0, float(free[0]), 1.0))
    else:
        nodes = symmetric_nodes(d, free)
    try:
        return ratio_sup(nodes)
    except DegeneratePartitionError:
        return math.inf


def _golden(f, lo: float, hi: float, tol: float) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    e = a + inv_phi * (b - a)
    fc, fe = f(c), f(e)
    while b - a > tol:
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + inv_phi * (b - a)
            fe = f(e)
    return 0.5 * (a + b)


def optimize_nodes(d: int, grid: float = 1e-3, tol: float = 1e-7, sweeps: int = 6) -> NodePartition:
    """Search for a partition with small worst-case ratio.

    Degree 1 searches its single interior node over (0, 1); higher degrees
    search symmetric partitions.  One free node is found by a grid scan
    refined with golden sections; several free nodes are tuned coordinate by
    coordinate, starting from the tabulated partition.
    """
    if not 0 <= d <= MAX_FIT_DEGREE:
        raise ValueError(f"degree must be ≤ {MAX_FIT_DEGREE}, got {d}")
    if d == 0:
        return NodePartition((0.0, 1.0), 1.0)
    span = 1.0 if d == 1 else 0.5
    nfree = 1 if d == 1 else d // 2
    if nfree == 1:
        steps = max(int(round(span / grid)), 4)
        xs = np.linspace(0.0, span, steps + 1)[1:-1]
        vals = [_objective(d, [x]) for x in xs]
        k = int(np.argmin(vals))
        best = [_golden(lambda x: _objective(d, [x]), xs[max(k - 1, 0)] if k > 0 else 0.0,
                        xs[min(k + 1, len(xs) - 1)] if k < len(xs) - 1 else span, tol)]
    else:
        best = list(table_nodes(d).interior[:nfree])
        for _ in range(sweeps):
            for i in range(nfree):
                left = best[i - 1] if i > 0 else 0.0
                right = best[i + 1] if i + 1 < nfree else span
                width = min(4 * grid + (right - left) * 0.25, right - left)
                a = max(left, best[i] - width / 2)
                b = min(right, best[i] + width / 2)

                def f(x, i=i):
                    trial = list(best)
                    trial[i] = x
                    return _objective(d, trial)

                cand = _golden(f, a, b, tol)
                if f(cand) <= _objective(d, best):
                    best[i] = cand
    nodes = NodePartition((0.0, best[0], 1.0)) if d == 1 else symmetric_nodes(d, best)
    return NodePartition(nodes.nodes, ratio_sup(nodes))
