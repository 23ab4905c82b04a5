"""Compiled inner loops: Sturm root isolation and absolute integrals.

All polynomials here are plain coefficient arrays in ascending powers.
"""
import numpy as np
import numba

ROOT_TOL = 1e-12
# relative size under which a coefficient is treated as zero
_TRIM = 1e-13
# difference polynomials smaller than this (relative) are identically zero
ZERO_DIFF = 1e-14


@numba.njit(cache=True, nogil=True)
def horner(c, deg, x):
    acc = 0.0
    for i in range(deg, -1, -1):
        acc = acc * x + c[i]
    return acc


@numba.njit(cache=True, nogil=True)
def antiderivative(c, deg, x):
    acc = 0.0
    for i in range(deg, -1, -1):
        acc = acc * x + c[i] / (i + 1)
    return acc * x


@numba.njit(cache=True, nogil=True)
def effective_degree(c, scale):
    deg = c.shape[0] - 1
    while deg > 0 and abs(c[deg]) <= _TRIM * scale:
        deg -= 1
    return deg


@numba.njit(cache=True, nogil=True)
def sturm_sequence(c, deg):
    """Rows of the Sturm chain of ``c[:deg+1]``; returns (chain, degrees, length)."""
    chain = np.zeros((deg + 1, deg + 1))
    degs = np.zeros(deg + 1, dtype=np.int64)
    scale = 0.0
    for i in range(deg + 1):
        chain[0, i] = c[i]
        scale = max(scale, abs(c[i]))
    degs[0] = deg
    for i in range(1, deg + 1):
        chain[1, i - 1] = i * c[i]
    degs[1] = deg - 1
    length = 2
    while degs[length - 1] > 0:
        u = chain[length - 2].copy()
        v = chain[length - 1]
        du = degs[length - 2]
        dv = degs[length - 1]
        ulead = 0.0
        for i in range(du + 1):
            ulead = max(ulead, abs(u[i]))
        for k in range(du - dv, -1, -1):
            q = u[dv + k] / v[dv]
            for j in range(dv + 1):
                u[j + k] -= q * v[j]
            u[dv + k] = 0.0
        dr = dv - 1
        while dr >= 0 and abs(u[dr]) <= _TRIM * max(ulead, scale * 1e-3):
            dr -= 1
        if dr < 0:
            break
        for j in range(deg + 1):
            chain[length, j] = -u[j] if j <= dr else 0.0
        degs[length] = dr
        length += 1
    return chain, degs, length


@numba.njit(cache=True, nogil=True)
def sign_changes(chain, degs, length, x):
    changes = 0
    prev = 0.0
    for k in range(length):
        val = horner(chain[k], degs[k], x)
        if val == 0.0:
            continue
        if prev != 0.0 and (val > 0.0) != (prev > 0.0):
            changes += 1
        prev = val
    return changes


@numba.njit(cache=True, nogil=True)
def _bisect_sign(c, deg, lo, hi, flo, tol):
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = horner(c, deg, mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo = mid
            flo = fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@numba.njit(cache=True, nogil=True)
def roots_in(c, a, b, tol):
    """Sorted distinct real roots of ``c`` in [a, b], deduplicated within ``tol``."""
    scale = 0.0
    for i in range(c.shape[0]):
        scale = max(scale, abs(c[i]))
    out = np.empty(0)
    if scale == 0.0 or not b >= a:
        return out
    deg = effective_degree(c, scale)
    if deg == 0:
        return out
    found = np.empty(4 * deg + 4)
    nfound = 0
    if horner(c, deg, a) == 0.0:
        found[nfound] = a
        nfound += 1
    if deg == 1:
        r = -c[0] / c[1]
        if a <= r <= b:
            found[nfound] = r
            nfound += 1
    else:
        chain, degs, length = sturm_sequence(c, deg)
        cap = 64 * (deg + 2)
        slo = np.empty(cap)
        shi = np.empty(cap)
        svlo = np.empty(cap, dtype=np.int64)
        svhi = np.empty(cap, dtype=np.int64)
        slo[0] = a
        shi[0] = b
        svlo[0] = sign_changes(chain, degs, length, a)
        svhi[0] = sign_changes(chain, degs, length, b)
        top = 1
        guard = 0
        while top > 0 and guard < 100000:
            guard += 1
            top -= 1
            lo = slo[top]
            hi = shi[top]
            vlo = svlo[top]
            vhi = svhi[top]
            count = vlo - vhi
            if count <= 0:
                continue
            if hi - lo <= tol:
                if nfound < found.shape[0]:
                    found[nfound] = 0.5 * (lo + hi)
                    nfound += 1
                continue
            flo = horner(c, deg, lo)
            fhi = horner(c, deg, hi)
            if count == 1 and flo != 0.0 and fhi != 0.0 and (flo > 0.0) != (fhi > 0.0):
                if nfound < found.shape[0]:
                    found[nfound] = _bisect_sign(c, deg, lo, hi, flo, tol)
                    nfound += 1
                continue
            if count == 1 and fhi == 0.0:
                if nfound < found.shape[0]:
                    found[nfound] = hi
                    nfound += 1
                continue
            if top + 2 > cap:
                continue
            mid = 0.5 * (lo + hi)
            vm = sign_changes(chain, degs, length, mid)
            slo[top] = lo
            shi[top] = mid
            svlo[top] = vlo
            svhi[top] = vm
            slo[top + 1] = mid
            shi[top + 1] = hi
            svlo[top + 1] = vm
            svhi[top + 1] = vhi
            top += 2
    if nfound == 0:
        return out
    vals = np.sort(found[:nfound])
    keep = np.empty(nfound)
    nk = 0
    for i in range(nfound):
        if nk == 0 or vals[i] - keep[nk - 1] > 2.0 * tol:
            keep[nk] = vals[i]
            nk += 1
    return keep[:nk]


@numba.njit(cache=True, nogil=True)
def abs_integral(c, a, b):
    """Integral of |c| over [a, b], summing signed areas between roots."""
    scale = 0.0
    for i in range(c.shape[0]):
        scale = max(scale, abs(c[i]))
    if scale == 0.0 or b <= a:
        return 0.0
    deg = effective_degree(c, scale)
    roots = roots_in(c, a, b, ROOT_TOL * max(1.0, b - a))
    total = 0.0
    left = a
    fleft = antiderivative(c, deg, a)
    for r in roots:
        if r <= left or r >= b:
            continue
        fr = antiderivative(c, deg, r)
        total += abs(fr - fleft)
        left = r
        fleft = fr
    total += abs(antiderivative(c, deg, b) - fleft)
    return total


@numba.njit(cache=True, nogil=True)
def _compose_affine(c, shift, slope, out):
    # out(s) = c(shift + slope * s)
    deg = c.shape[0] - 1
    for i in range(deg + 1):
        out[i] = 0.0
    out[0] = c[deg]
    for j in range(deg - 1, -1, -1):
        for i in range(deg, 0, -1):
            out[i] = out[i] * shift + out[i - 1] * slope
        out[0] = out[0] * shift + c[j]


@numba.njit(cache=True, nogil=True)
def cell_gap(own, other, shift, slope, work, diff):
    """l1 of own(s) - slope*other(shift + slope*s) over s in [0, 1]."""
    _compose_affine(other, shift, slope, work)
    scale = 0.0
    size = 0.0
    for i in range(own.shape[0]):
        w = slope * work[i]
        diff[i] = own[i] - w
        scale = max(scale, abs(own[i]), abs(w))
        size = max(size, abs(diff[i]))
    if size <= ZERO_DIFF * scale:
        return 0.0
    return abs_integral(diff, 0.0, 1.0)


@numba.njit(cache=True, nogil=True)
def gap_batch(rows, own, anc, other, shift, slope, out):
    """Fill out[k] with the l1 gap between fit own[rows[k]] and fit other[anc[k]].

    Coefficients are unit-frame fits; a zero ``slope`` marks a zero-length
    cell, whose gap is zero.
    """
    m = own.shape[1]
    work = np.empty(m)
    diff = np.empty(m)
    for k in range(rows.shape[0]):
        if slope[k] == 0.0:
            out[k] = 0.0
        else:
            out[k] = cell_gap(own[rows[k]], other[anc[k]], shift[k], slope[k], work, diff)
