"""Synthetic mixture densities used as ground truth, and the l1 error evaluator."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, special

from .polynomial import PiecewiseEstimate

FAMILIES = ("beta", "gaussian", "gamma")


@dataclass(frozen=True)
class Component:
    weight: float
    family: str
    params: tuple

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if len(params) != 2:
            raise ValueError(f"{self.family} takes two parameters, got {params}")
        if not self.weight > 0:
            raise ValueError("component weights must be positive")
        a, b = params
        if self.family == "beta" and not (a > 0 and b > 0):
            raise ValueError(f"beta shapes must be positive: {params}")
        if self.family == "gaussian" and not b > 0:
            raise ValueError(f"gaussian sigma must be positive: {params}")
        if self.family == "gamma" and not (a > 0 and b > 0):
            raise ValueError(f"gamma shape and scale must be positive: {params}")

    @property
    def support(self) -> tuple[float, float]:
        if self.family == "beta":
            return 0.0, 1.0
        if self.family == "gamma":
            return 0.0, math.inf
        return -math.inf, math.inf

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.params
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.family == "gaussian":
                out = np.exp(-0.5 * ((x - a) / b) ** 2) / (b * math.sqrt(2 * math.pi))
            elif self.family == "beta":
                inside = (x > 0) & (x < 1)
                xc = np.where(inside, x, 0.5)
                logp = (a - 1) * np.log(xc) + (b - 1) * np.log1p(-xc) - special.betaln(a, b)
                out = np.where(inside, np.exp(logp), 0.0)
            else:
                inside = x > 0
                xc = np.where(inside, x, 1.0)
                logp = (a - 1) * np.log(xc) - xc / b - special.gammaln(a) - a * math.log(b)
                out = np.where(inside, np.exp(logp), 0.0)
        return out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.params
        if self.family == "gaussian":
            return special.ndtr((x - a) / b)
        if self.family == "beta":
            return special.betainc(a, b, np.clip(x, 0.0, 1.0))
        return special.gammainc(a, np.maximum(x, 0.0) / b)

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        a, b = self.params
        if self.family == "gaussian":
            return rng.normal(a, b, count)
        if self.family == "beta":
            return rng.beta(a, b, count)
        return rng.gamma(a, b, count)


@dataclass(frozen=True)
class MixtureSpec:
    components: tuple
    name: str = ""

    def __post_init__(self):
        comps = tuple(c if isinstance(c, Component) else Component(*c) for c in self.components)
        if not comps:
            raise ValueError("a mixture needs at least one component")
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total}, not 1")
        object.__setattr__(self, "components", comps)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    def pdf(self, x):
        return sum(c.weight * c.pdf(x) for c in self.components)

    def cdf(self, x):
        return sum(c.weight * c.cdf(x) for c in self.components)

    def mass(self, lo: float, hi: float) -> float:
        return float(self.cdf(hi) - self.cdf(lo))

    def to_json(self) -> list:
        return [{"weight": c.weight, "family": c.family, "params": list(c.params)} for c in self.components]

    @classmethod
    def from_json(cls, doc, name: str = "") -> "MixtureSpec":
        if isinstance(doc, dict):
            name = doc.get("name", name)
            doc = doc["components"]
        return cls(tuple(Component(c["weight"], c["family"], tuple(c["params"])) for c in doc), name)

    def __str__(self):
        parts = []
        for c in self.components:
            label = {"beta": "Beta", "gaussian": "N", "gamma": "Gam"}[c.family]
            a, b = c.params
            if c.family == "gaussian":
                parts.append(f"{c.weight:g}{label}({a:g},{b:g}^2)")
            else:
                parts.append(f"{c.weight:g}{label}({a:g},{b:g})")
        return " + ".join(parts)


def sample(spec: MixtureSpec, count: int, seed=None) -> np.ndarray:
    """``count`` i.i.d. draws, reproducible from ``seed`` (Philox counter-based stream)."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.Generator(np.random.Philox(seed))
    labels = rng.choice(len(spec.components), size=count, p=spec.weights)
    out = np.empty(count)
    for k, comp in enumerate(spec.components):
        idx = np.flatnonzero(labels == k)
        if idx.size:
            out[idx] = comp.draw(rng, idx.size)
    return out


def pdf(spec: MixtureSpec, x):
    return spec.pdf(x)


def _piece_error(poly, lo: float, hi: float, spec: MixtureSpec, rtol: float):
    def gap(x):
        return abs(poly(x) - float(spec.pdf(x)))

    # sign changes of the difference are where quad needs help; a coarse grid finds most of them
    grid = np.linspace(lo, hi, 33)
    diff = poly(grid) - spec.pdf(grid)
    points = grid[1:-1][np.sign(diff[1:-1]) != np.sign(diff[:-2])]
    value, err = integrate.quad(gap, lo, hi, points=points if points.size else None,
                                epsabs=1e-13, epsrel=rtol, limit=400)
    return value, err


def l1_error(est: PiecewiseEstimate, spec: MixtureSpec, rtol: float = 1e-6) -> float:
    """l1 distance between ``est`` (zero outside its hull) and the mixture density."""
    total = 0.0
    for piece in est.pieces:
        if piece.hi > piece.lo:
            value, _ = _piece_error(piece.poly, piece.lo, piece.hi, spec, rtol)
            total += value
    lo, hi = est.hull
    total += float(spec.cdf(lo)) + 1.0 - float(spec.cdf(hi))
    return total


def _mix(name, *parts):
    return MixtureSpec(tuple(Component(w, fam, p) for w, fam, p in parts), name)


_BUILTIN = (
    _mix("beta-f1", (0.4, "beta", (3, 4)), (0.6, "beta", (5, 2))),
    _mix("beta-f2", (0.4, "beta", (10, 3)), (0.6, "beta", (2, 8))),
    _mix("beta-f3", (1.0, "beta", (6, 6))),
    _mix("gauss-f1", (0.3, "gaussian", (0.4, 0.1)), (0.7, "gaussian", (0.6, 0.2))),
    _mix("gauss-f2", (0.4, "gaussian", (0.3, 0.05)), (0.6, "gaussian", (0.7, 0.15))),
    _mix("gamma-f1", (0.2, "gamma", (4, 0.04)), (0.8, "gamma", (8, 0.06))),
    _mix("gamma-f2", (0.4, "gamma", (3, 0.05)), (0.6, "gamma", (6, 0.075))),
    _mix("beta-comp", (0.4, "beta", (0.8, 4)), (0.6, "beta", (2, 2))),
    _mix("gamma-comp", (0.7, "gamma", (2, 2)), (0.3, "gamma", (7.5, 1))),
    _mix("gauss-comp", (0.65, "gaussian", (-0.45, 0.15)), (0.35, "gaussian", (0.3, 0.2))),
)


def builtin_specs() -> dict[str, MixtureSpec]:
    return {spec.name: spec for spec in _BUILTIN}


def get_spec(name_or_path: str) -> MixtureSpec:
    """Resolve a catalog name, or load a JSON spec file."""
    catalog = builtin_specs()
    if name_or_path in catalog:
        return catalog[name_or_path]
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        return MixtureSpec.from_json(json.loads(path.read_text()), path.stem)
    raise KeyError(f"unknown spec {name_or_path!r}; builtins are {', '.join(catalog)}")
