"""Low-degree polynomials, their absolute integrals, and piecewise estimates.

A :class:`Polynomial` is ``sum c_i * t**i`` with ``t = (x - origin) / width``.
The default frame (0, 1) is the plain monomial basis; fitted pieces keep the
frame of their own interval so that high degrees stay well conditioned on
narrow intervals.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels

MAX_DEGREE = 16


@dataclass(frozen=True, eq=False)
class Polynomial:
    coeffs: np.ndarray
    origin: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size == 0:
            c = np.zeros(1)
        if c.size > MAX_DEGREE + 1:
            raise ValueError(f"degree {c.size - 1} exceeds {MAX_DEGREE}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if not self.width > 0:
            raise ValueError("frame width must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "origin", float(self.origin))
        object.__setattr__(self, "width", float(self.width))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def local(self, x):
        return (np.asarray(x, dtype=float) - self.origin) / self.width

    def __call__(self, x):
        return eval_poly(self, x)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        other = other.reframed(self.origin, self.width)
        m = max(self.coeffs.size, other.coeffs.size)
        return Polynomial(_pad(self.coeffs, m) - _pad(other.coeffs, m), self.origin, self.width)

    def scaled(self, factor: float) -> "Polynomial":
        return Polynomial(self.coeffs * factor, self.origin, self.width)

    def reframed(self, origin: float, width: float) -> "Polynomial":
        """The same function written in the frame (origin, width)."""
        if origin == self.origin and width == self.width:
            return self
        shift = (origin - self.origin) / self.width
        slope = width / self.width
        out = np.empty_like(self.coeffs)
        _kernels._compose_affine(np.ascontiguousarray(self.coeffs), shift, slope, out)
        return Polynomial(out, origin, width)

    def __repr__(self):
        frame = "" if (self.origin, self.width) == (0.0, 1.0) else f", origin={self.origin!r}, width={self.width!r}"
        return f"Polynomial({self.coeffs.tolist()}{frame})"


def _pad(c: np.ndarray, size: int) -> np.ndarray:
    return np.concatenate([c, np.zeros(size - c.size)])


def eval_poly(p: Polynomial, x):
    t = p.local(x)
    acc = np.zeros_like(t)
    for c in p.coeffs[::-1]:
        acc = acc * t + c
    return float(acc) if acc.ndim == 0 else acc


def integrate(p: Polynomial, a: float, b: float) -> float:
    """Signed integral of ``p`` over [a, b]."""
    if a > b:
        raise ValueError(f"integration bounds reversed: {a} > {b}")
    ta, tb = p.local(a), p.local(b)
    deg = p.degree
    return p.width * (_kernels.antiderivative(p.coeffs, deg, float(tb)) - _kernels.antiderivative(p.coeffs, deg, float(ta)))


def real_roots_in(p: Polynomial, a: float, b: float) -> list[float]:
    """Distinct real roots in [a, b] by Sturm counting and bisection."""
    if p.is_zero():
        raise ValueError("the zero polynomial has no isolated roots")
    if a > b:
        raise ValueError(f"bounds reversed: {a} > {b}")
    ta, tb = float(p.local(a)), float(p.local(b))
    tol = _kernels.ROOT_TOL / p.width
    roots = _kernels.roots_in(p.coeffs, ta, tb, tol)
    return [min(max(p.origin + p.width * r, a), b) for r in roots]


def abs_l1(p: Polynomial, a: float, b: float) -> float:
    """Integral of |p| over [a, b]."""
    if a > b:
        raise ValueError(f"integration bounds reversed: {a} > {b}")
    return p.width * _kernels.abs_integral(p.coeffs, float(p.local(a)), float(p.local(b)))


def l1_between(p: Polynomial, q: Polynomial, a: float, b: float) -> float:
    """Integral of |p - q| over [a, b]; negligible differences count as zero."""
    if a > b:
        raise ValueError(f"integration bounds reversed: {a} > {b}")
    if b == a:
        return 0.0
    pc = p.reframed(a, b - a).coeffs
    qc = q.reframed(a, b - a).coeffs
    m = max(pc.size, qc.size)
    pc, qc = _pad(pc, m), _pad(qc, m)
    scale = max(np.max(np.abs(pc)), np.max(np.abs(qc)))
    diff = pc - qc
    if np.max(np.abs(diff)) <= _kernels.ZERO_DIFF * scale:
        return 0.0
    return (b - a) * _kernels.abs_integral(diff, 0.0, 1.0)


def rescale_density(p: Polynomial, lo: float, hi: float) -> Polynomial:
    """Carry a density on [0, 1] to [lo, hi], preserving the mass of every sub-range."""
    length = hi - lo
    if not length > 0:
        raise ValueError(f"target interval [{lo}, {hi}] has no length")
    return Polynomial(p.coeffs / length, lo + p.origin * length, p.width * length)


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    poly: Polynomial
    lo_index: int | None = None
    hi_index: int | None = None


@dataclass(frozen=True)
class PiecewiseEstimate:
    """Contiguous polynomial pieces covering ``hull``; zero outside it."""

    pieces: tuple
    hull: tuple
    degree: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValueError("an estimate needs at least one piece")
        for left, right in zip(pieces[:-1], pieces[1:]):
            if left.hi != right.lo:
                raise ValueError(f"pieces not contiguous at {left.hi} / {right.lo}")
        if (pieces[0].lo, pieces[-1].hi) != tuple(self.hull):
            raise ValueError("pieces do not cover the hull")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "hull", (float(self.hull[0]), float(self.hull[1])))

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([p.lo for p in self.pieces] + [self.pieces[-1].hi])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for k, piece in enumerate(self.pieces):
            last = k == len(self.pieces) - 1
            mask = (x >= piece.lo) & ((x <= piece.hi) if last else (x < piece.hi))
            if np.any(mask):
                out[mask] = eval_poly(piece.poly, x[mask])
        return float(out) if out.ndim == 0 else out

    def total_mass(self) -> float:
        return sum(integrate(p.poly, p.lo, p.hi) for p in self.pieces)

    def piece_at(self, x: float) -> Piece:
        bounds = self.breakpoints
        k = int(np.searchsorted(bounds, x, side="right")) - 1
        return self.pieces[min(max(k, 0), len(self.pieces) - 1)]

    def to_json(self) -> dict:
        rows = []
        for p in self.pieces:
            poly = p.poly.reframed(p.lo, p.hi - p.lo) if p.hi > p.lo else p.poly
            rows.append([p.lo, p.hi, *poly.coeffs.tolist()])
        doc = {"format": "surf-estimate/1", "degree": self.degree, "hull": list(self.hull), "pieces": rows}
        if self.meta:
            doc["meta"] = self.meta
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, doc: dict) -> "PiecewiseEstimate":
        pieces = []
        for row in doc["pieces"]:
            lo, hi, *coeffs = row
            pieces.append(Piece(lo, hi, Polynomial(coeffs, lo, hi - lo if hi > lo else 1.0)))
        return cls(tuple(pieces), tuple(doc["hull"]), int(doc.get("degree", 0)), doc.get("meta", {}))

    @classmethod
    def loads(cls, text: str) -> "PiecewiseEstimate":
        return cls.from_json(json.loads(text))


def l1_distance_piecewise(u: PiecewiseEstimate, v: PiecewiseEstimate, lo: float, hi: float) -> float:
    """Exact l1 distance over [lo, hi] on the common refinement of both breakpoint sets."""
    if lo > hi:
        raise ValueError("region bounds reversed")
    for est in (u, v):
        if est.hull[0] > lo or est.hull[1] < hi:
            raise ValueError(f"estimate with hull {est.hull} does not cover [{lo}, {hi}]")
    cuts = np.union1d(u.breakpoints, v.breakpoints)
    cuts = np.concatenate([[lo], cuts[(cuts > lo) & (cuts < hi)], [hi]])
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b > a:
            mid = 0.5 * (a + b)
            total += l1_between(u.piece_at(mid).poly, v.piece_at(mid).poly, a, b)
    return total


def piecewise_from(breaks: Sequence[float], polys: Sequence[Polynomial], degree: int = 0) -> PiecewiseEstimate:
    pieces = tuple(Piece(a, b, p) for a, b, p in zip(breaks[:-1], breaks[1:], polys))
    return PiecewiseEstimate(pieces, (breaks[0], breaks[-1]), degree)
