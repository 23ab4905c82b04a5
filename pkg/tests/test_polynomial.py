from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sci

from surfdens.polynomial import (
    Piece,
    PiecewiseEstimate,
    Polynomial,
    abs_l1,
    eval_poly,
    integrate,
    l1_between,
    l1_distance_piecewise,
    piecewise_from,
    real_roots_in,
    rescale_density,
)

coeff = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
polys = st.lists(coeff, min_size=1, max_size=9).map(Polynomial)


def test_eval_examples():
    p = Polynomial([0.3, 0.4])
    assert eval_poly(p, 0.0) == 0.3
    assert eval_poly(p, 1.0) == pytest.approx(0.7, abs=1e-15)
    assert np.all(eval_poly(Polynomial([1.0]), np.array([-3.0, 0.0, 9.0])) == 1.0)


def test_integrate_examples():
    assert integrate(Polynomial([1.0]), 0, 1) == 1.0
    assert integrate(Polynomial([-0.25, 1.0]), 0, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert integrate(Polynomial([0, 0, 3.0]), 0, 1) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        integrate(Polynomial([1.0]), 1, 0)


def test_roots_examples():
    assert real_roots_in(Polynomial([-0.25, 1.0]), 0, 1) == pytest.approx([0.25], abs=1e-12)
    assert real_roots_in(Polynomial([1.0]), 0, 1) == []
    assert real_roots_in(Polynomial([0.02, -0.3, 1.0]), 0, 1) == pytest.approx([0.1, 0.2], abs=1e-12)
    with pytest.raises(ValueError):
        real_roots_in(Polynomial([0.0, 0.0]), 0, 1)


def test_roots_of_many_close_roots():
    true = np.linspace(0.05, 0.95, 8)
    p = Polynomial(np.polynomial.polynomial.polyfromroots(true))
    assert real_roots_in(p, 0, 1) == pytest.approx(true.tolist(), abs=1e-10)


def test_repeated_root_deduplicated():
    p = Polynomial(np.polynomial.polynomial.polyfromroots([0.3, 0.3, 0.7]))
    roots = real_roots_in(p, 0, 1)
    assert roots[-1] == pytest.approx(0.7, abs=1e-12)
    assert all(r == pytest.approx(0.3, abs=1e-6) for r in roots[:-1])


@given(polys)
def test_root_residuals_small(p):
    if p.is_zero():
        return
    scale = float(np.max(np.abs(p.coeffs)))
    for r in real_roots_in(p, 0.0, 1.0):
        assert 0 <= r <= 1
        assert abs(eval_poly(p, r)) <= 1e-9 * scale


def test_abs_l1_examples():
    assert abs_l1(Polynomial([-0.25, 1.0]), 0, 1) == pytest.approx(0.3125, abs=1e-15)
    assert abs_l1(Polynomial([1.0]), 0, 1) == 1.0
    assert abs_l1(Polynomial([-0.5, 1.0]), 0, 1) == pytest.approx(0.25, abs=1e-15)


@given(polys, st.floats(-2, 2), st.floats(0, 3))
def test_abs_l1_dominates_signed(p, a, width):
    b = a + width
    signed = abs(integrate(p, a, b))
    total = abs_l1(p, a, b)
    assert total >= signed - 1e-12 * max(1.0, total)
    if p.is_zero():
        return
    if not real_roots_in(p, a, b):
        assert total == pytest.approx(signed, rel=1e-12, abs=1e-15)


def _quad_abs(c, a, b):
    # breakpoints from numpy's companion-matrix roots, independent of the Sturm code
    roots = np.roots(c[::-1]) if np.any(c[1:]) else np.array([])
    real = roots[np.abs(roots.imag) < 1e-9].real
    pts = np.sort(real[(real > a) & (real < b)])
    f = lambda x: abs(np.polynomial.polynomial.polyval(x, c))
    edges = np.concatenate([[a], pts, [b]])
    return sum(sci.quad(f, lo, hi, epsabs=0, epsrel=1e-13, limit=200)[0] for lo, hi in zip(edges[:-1], edges[1:]))


def test_abs_l1_matches_quadrature():
    rng = np.random.default_rng(20240)
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(0, 9))
        c = rng.uniform(-10, 10, d + 1)
        got = abs_l1(Polynomial(c), 0.0, 1.0)
        want = _quad_abs(c, 0.0, 1.0)
        worst = max(worst, abs(got - want) / max(want, 1e-300))
    assert worst <= 1e-9


def test_rescale_examples():
    r = rescale_density(Polynomial([1.0]), 2.0, 4.0)
    assert r(3.0) == pytest.approx(0.5) and r(2.0) == pytest.approx(0.5)
    p = Polynomial([0.3, 0.4, -0.2])
    same = rescale_density(p, 0.0, 1.0)
    xs = np.linspace(0, 1, 7)
    assert np.allclose(same(xs), p(xs), atol=1e-15)
    q = rescale_density(p, 2.0, 4.0)
    assert integrate(q, 2.0, 3.0) == pytest.approx(integrate(p, 0.0, 0.5), abs=1e-14)
    with pytest.raises(ValueError):
        rescale_density(p, 1.0, 1.0)


@given(polys, st.floats(-50, 50), st.floats(1e-3, 100))
def test_rescale_preserves_mass(p, lo, length):
    q = rescale_density(p, lo, lo + length)
    want = integrate(p, 0, 1)
    assert integrate(q, lo, lo + length) == pytest.approx(want, abs=1e-12 * max(1.0, np.abs(p.coeffs).sum()))


def test_reframe_is_same_function():
    p = Polynomial([1.0, -2.0, 0.5], origin=3.0, width=2.0)
    q = p.reframed(-1.0, 0.25)
    xs = np.linspace(-2, 6, 11)
    assert np.allclose(p(xs), q(xs), rtol=1e-12, atol=1e-12)


def test_l1_between_zero_threshold():
    p = Polynomial([0.3, 0.4])
    assert l1_between(p, p, 0, 1) == 0.0
    assert l1_between(p, Polynomial([0.3 + 1e-17, 0.4]), 0, 1) == 0.0


def test_l1_distance_piecewise_examples():
    u = piecewise_from([0.0, 1.0], [Polynomial([0.3, 0.4])])
    v = piecewise_from([0.0, 1.0], [Polynomial([0.5])])
    one = piecewise_from([0.0, 1.0], [Polynomial([1.0])])
    zero = piecewise_from([0.0, 1.0], [Polynomial([0.0])])
    assert l1_distance_piecewise(u, u, 0, 1) == 0.0
    assert l1_distance_piecewise(one, zero, 0, 1) == 1.0
    assert l1_distance_piecewise(u, v, 0, 1) == pytest.approx(0.1, abs=1e-15)


def test_l1_distance_common_refinement():
    u = piecewise_from([0.0, 0.5, 1.0], [Polynomial([1.0]), Polynomial([2.0])])
    v = piecewise_from([0.0, 0.25, 1.0], [Polynomial([0.0]), Polynomial([1.0])])
    assert l1_distance_piecewise(u, v, 0, 1) == pytest.approx(0.25 + 0.5, abs=1e-15)
    with pytest.raises(ValueError):
        l1_distance_piecewise(u, v, -1, 1)


def test_estimate_validation():
    with pytest.raises(ValueError):
        PiecewiseEstimate((Piece(0, 1, Polynomial([1.0])), Piece(1.5, 2, Polynomial([1.0]))), (0, 2))
    with pytest.raises(ValueError):
        PiecewiseEstimate((Piece(0, 1, Polynomial([1.0])),), (0, 2))


def test_estimate_zero_outside_hull():
    est = piecewise_from([0.0, 0.5, 1.0], [Polynomial([1.0]), Polynomial([3.0])])
    assert est(np.array([-0.1, 0.25, 0.5, 1.0, 1.1])).tolist() == [0.0, 1.0, 3.0, 3.0, 0.0]
    assert est.total_mass() == pytest.approx(2.0)


@settings(max_examples=50)
@given(st.lists(st.lists(coeff, min_size=1, max_size=9), min_size=1, max_size=6), st.floats(-1e3, 1e3))
def test_json_round_trip_exact(coeff_rows, lo):
    breaks = lo + np.cumsum([0.0] + [0.5] * len(coeff_rows))
    # pieces from the estimator carry the frame (lo, hi - lo), which the format stores
    polys = [Polynomial(c, origin=a, width=b - a) for c, a, b in zip(coeff_rows, breaks[:-1], breaks[1:])]
    est = piecewise_from(breaks, polys, degree=8)
    back = PiecewiseEstimate.loads(est.dumps())
    assert back.hull == est.hull and back.degree == 8
    for p, q in zip(est.pieces, back.pieces):
        assert (p.lo, p.hi) == (q.lo, q.hi)
        assert np.array_equal(p.poly.coeffs, q.poly.coeffs)
    again = PiecewiseEstimate.loads(back.dumps())
    assert json.loads(again.dumps()) == json.loads(back.dumps())
