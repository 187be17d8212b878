"""Compiled homodyne Fisher-information integrator.

Mirrors :func:`wva_fisher.qstate.integrate_converged` (global Simpson halving,
then locally adaptive panels) for the one integrand that dominates run time:
the x-quadrature FI of the two-branch meter.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_PRE = math.pi**-0.25
_SQRT2 = math.sqrt(2.0)
_FLOOR = 1e-300
_LOG_PRE2 = -0.5 * math.log(math.pi)
_BLOCK = 128
# recurrences are used only while |psi1|^2 >= e^-600 and |psi2/psi1| <= e^150,
# so no intermediate in _combine can overflow or underflow
_GAUSS_SAFE = 600.0
_RATIO_SAFE = 150.0


@njit(cache=True)
def _combine(x, gauss, ratio, u1, u2, tm, tp, pa, c):
    # amplitude psi1 * (u1 + u2 * ratio) with psi2 = psi1 * ratio; gauss = |psi1|^2
    a1 = (_SQRT2 * x - tm) * (1j * tm)
    a2 = (_SQRT2 * x - tp) * (1j * tp)
    g = u1 + u2 * ratio
    h = -u1 * a1 + u2 * ratio * a2
    gg = g.real * g.real + g.imag * g.imag
    if gauss * gg / pa <= _FLOOR:
        return 0.0
    t = 2.0 * (g.real * h.real + g.imag * h.imag) - gg * c
    return gauss * t * t / (gg * pa)


@njit(cache=True)
def _log_gauss(x, tm, nbar):
    return -x * x - nbar + 2.0 * _SQRT2 * x * tm.real - (tm * tm).real + _LOG_PRE2


@njit(cache=True)
def _point(x, u1, u2, tm, tp, pa, dpa, nbar):
    shift = -0.5 * x * x - 0.5 * nbar
    psi1 = _PRE * np.exp(shift + _SQRT2 * x * tm - 0.5 * tm * tm)
    psi2 = _PRE * np.exp(shift + _SQRT2 * x * tp - 0.5 * tp * tp)
    amp = u1 * psi1 + u2 * psi2
    damp = -u1 * psi1 * (_SQRT2 * x - tm) * (1j * tm) + u2 * psi2 * (_SQRT2 * x - tp) * (1j * tp)
    num = amp.real * amp.real + amp.imag * amp.imag
    p = num / pa
    if p <= _FLOOR:
        return 0.0
    dp = 2.0 * (amp.real * damp.real + amp.imag * damp.imag) / pa - num * dpa / (pa * pa)
    return dp * dp / p


@njit(cache=True)
def _uniform_sum(x0, dx, count, u1, u2, tm, tp, pa, dpa, nbar):
    """Sum of the integrand over ``x0 + i dx`` for ``i < count``.

    Inside each block the Gaussian and the branch ratio advance by
    multiplication; blocks whose exponents could leave the safe range are
    evaluated directly.
    """
    kappa = _SQRT2 * (tp - tm)
    mu = -0.5 * (tp * tp - tm * tm)
    c = dpa / pa
    total = 0.0
    i = 0
    while i < count:
        m = min(_BLOCK, count - i)
        xa = x0 + i * dx
        xb = x0 + (i + m - 1) * dx
        lga = _log_gauss(xa, tm, nbar)
        lgb = _log_gauss(xb, tm, nbar)
        ea = (kappa * xa + mu).real
        eb = (kappa * xb + mu).real
        if min(lga, lgb) > -_GAUSS_SAFE and max(abs(ea), abs(eb)) < _RATIO_SAFE:
            gauss = math.exp(lga)
            ratio = np.exp(kappa * xa + mu)
            step = np.exp(kappa * dx)
            rho = math.exp(-2.0 * xa * dx - dx * dx + 2.0 * _SQRT2 * dx * tm.real)
            shrink = math.exp(-2.0 * dx * dx)
            for j in range(m):
                total += _combine(xa + j * dx, gauss, ratio, u1, u2, tm, tp, pa, c)
                gauss *= rho
                rho *= shrink
                ratio *= step
        else:
            for j in range(m):
                total += _point(xa + j * dx, u1, u2, tm, tp, pa, dpa, nbar)
        i += m
    return total


@njit(cache=True)
def _adaptive(lo, hi, n0, tol, max_depth, u1, u2, tm, tp, pa, dpa, nbar):
    size = n0 + 2 * max_depth + 8
    sa = np.empty(size)
    sb = np.empty(size)
    sfa = np.empty(size)
    sfm = np.empty(size)
    sfb = np.empty(size)
    sd = np.empty(size, dtype=np.int64)
    h0 = (hi - lo) / n0
    top = 0
    for i in range(n0 - 1, -1, -1):
        a = lo + i * h0
        b = lo + (i + 1) * h0
        sa[top] = a
        sb[top] = b
        sfa[top] = _point(a, u1, u2, tm, tp, pa, dpa, nbar)
        sfm[top] = _point(0.5 * (a + b), u1, u2, tm, tp, pa, dpa, nbar)
        sfb[top] = _point(b, u1, u2, tm, tp, pa, dpa, nbar)
        sd[top] = 0
        top += 1
    density = tol / (hi - lo)
    total = 0.0
    forced = 0.0
    while top > 0:
        top -= 1
        a = sa[top]
        b = sb[top]
        fa = sfa[top]
        fm = sfm[top]
        fb = sfb[top]
        depth = sd[top]
        m = 0.5 * (a + b)
        fl = _point(0.5 * (a + m), u1, u2, tm, tp, pa, dpa, nbar)
        fr = _point(0.5 * (m + b), u1, u2, tm, tp, pa, dpa, nbar)
        h = b - a
        coarse = h / 6.0 * (fa + 4.0 * fm + fb)
        fine = h / 12.0 * (fa + 4.0 * fl + 2.0 * fm + 4.0 * fr + fb)
        if abs(fine - coarse) <= 15.0 * density * h:
            total += fine + (fine - coarse) / 15.0
            continue
        if depth >= max_depth:
            # rounding noise near a zero of the amplitude; keep the panel, book its error
            total += fine + (fine - coarse) / 15.0
            forced += abs(fine - coarse) / 15.0
            continue
        # push right child first so the left one is processed next
        sa[top] = m
        sb[top] = b
        sfa[top] = fm
        sfm[top] = fr
        sfb[top] = fb
        sd[top] = depth + 1
        top += 1
        sa[top] = a
        sb[top] = m
        sfa[top] = fa
        sfm[top] = fl
        sfb[top] = fm
        sd[top] = depth + 1
        top += 1
    return total, forced <= tol


@njit(cache=True)
def quadrature_fi_batch(lo, hi, u1, u2, tm, tp, pa, dpa, nbar, rtol, atol, n0, local_after, max_depth):
    """FI integral for each parameter set; returns ``(values, converged)``."""
    k = u1.size
    out = np.empty(k)
    ok = np.ones(k, dtype=np.bool_)
    for j in range(k):
        args = (u1[j], u2[j], tm[j], tp[j], pa[j], dpa[j], nbar)
        n = n0
        h = (hi - lo) / n
        ends = _point(lo, *args) + _point(hi, *args)
        even = _uniform_sum(lo + 2 * h, 2 * h, n // 2 - 1, *args)
        odd = _uniform_sum(lo + h, 2 * h, n // 2, *args)
        total = ends + even + odd
        trap = h * (total - 0.5 * ends)
        simpson = (4.0 * trap - 2.0 * h * (even + 0.5 * ends)) / 3.0
        done = False
        for _ in range(local_after):
            h *= 0.5
            total += _uniform_sum(lo + h, 2 * h, n, *args)
            n *= 2
            trap_fine = h * (total - 0.5 * ends)
            refined = (4.0 * trap_fine - trap) / 3.0
            if abs(refined - simpson) <= rtol * abs(refined) + atol:
                out[j] = refined
                done = True
                break
            trap = trap_fine
            simpson = refined
        if not done:
            tol = rtol * abs(simpson) + atol
            out[j], ok[j] = _adaptive(lo, hi, n0, tol, max_depth, *args)
    return out, ok
