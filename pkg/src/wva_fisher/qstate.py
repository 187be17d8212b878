"""Coherent-state mathematics: Fock expansions, overlaps, quadrature wavefunctions.

Amplitudes are plain Python/numpy complex numbers; a homodyne phase is a plain
float in radians. Conventions:

* ``|alpha> = exp(-|alpha|^2/2) sum_n alpha^n / sqrt(n!) |n>``
* quadrature ``x = (a e^{-i phi} + a^dag e^{i phi}) / sqrt(2)`` with
  wavefunction ``<x|alpha> = pi^{-1/4} exp(1/2 [at^2 - |at|^2 - (x - sqrt2 at)^2])``
  and ``at = alpha e^{-i phi}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IntegrationNotConverged, InvalidInput, TruncationOverflow

DEFAULT_TOL = 1e-12
HARD_CAP = 1_000_000
SQRT2 = math.sqrt(2.0)
QUADRATURE_SIGMA = 1.0 / SQRT2

# Stirling-series coefficients for log(n!) - log(sqrt(2 pi n) (n/e)^n)
_S0, _S1, _S2, _S3, _S4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188


@dataclass(frozen=True)
class FockVector:
    """Truncated photon-number representation of a (normalized) state.

    ``tail_bound`` bounds the probability mass dropped beyond ``n_max``.
    """

    coeffs: np.ndarray
    n_max: int
    tail_bound: float

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2

    @property
    def norm_squared(self) -> float:
        return float(np.sum(self.probabilities))

    def inner(self, other: "FockVector") -> complex:
        """``<self|other>`` over the common truncated range."""
        n = min(self.n_max, other.n_max) + 1
        return complex(np.vdot(self.coeffs[:n], other.coeffs[:n]))


def coherent_overlap(a1: complex, a2: complex) -> complex:
    """``<a1|a2> = exp(-(|a1|^2 + |a2|^2)/2 + conj(a1) a2)``."""
    a1 = complex(a1)
    a2 = complex(a2)
    # same exponent rearranged as -|a1 - a2|^2 / 2 + i Im(conj(a1) a2): no cancellation, modulus <= 1
    return complex(np.exp(complex(-0.5 * abs(a1 - a2) ** 2, (a1.conjugate() * a2).imag)))


def _stirling_error(n: int) -> float:
    if n <= 15:
        return math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - 0.5 * math.log(2 * math.pi)
    nn = float(n) * n
    return (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / n


def _deviance(x: float, mu: float) -> float:
    """``x log(x/mu) + mu - x`` without cancellation near ``x == mu``."""
    if abs(x - mu) < 0.1 * (x + mu):
        v = (x - mu) / (x + mu)
        s = (x - mu) * v
        ej = 2.0 * x * v
        v2 = v * v
        j = 1
        while True:
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
    return x * math.log(x / mu) + mu - x


def poisson_log_mass(k: int, mu: float) -> float:
    """``log(e^-mu mu^k / k!)`` in saddle-point form; ``mu > 0``."""
    if k == 0:
        return -mu
    return -_stirling_error(k) - _deviance(float(k), mu) - 0.5 * math.log(2 * math.pi * k)


def poisson_mass(k: int, mu: float) -> float:
    """Poisson probability ``e^-mu mu^k / k!`` accurate to a few ulps."""
    if mu == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(poisson_log_mass(k, mu))


def poisson_pmf(nbar: float, n_max: int) -> np.ndarray:
    """Poisson(nbar) masses for ``n = 0..n_max``.

    Anchored at the mode and extended outward by the ratio recurrence
    ``p_{n+1} = p_n nbar / (n+1)``; entries far in the tails underflow to 0.
    """
    nbar = float(nbar)
    if nbar < 0 or not math.isfinite(nbar):
        raise InvalidInput(f"mean photon number must be finite and >= 0, got {nbar}")
    out = np.zeros(n_max + 1)
    if nbar == 0.0:
        out[0] = 1.0
        return out
    mode = min(int(nbar), n_max)
    log_pm = poisson_log_mass(mode, nbar)
    k_up = np.arange(mode + 1, n_max + 1)
    if k_up.size:
        # a subnormal nbar makes nbar / k underflow; log -> -inf -> mass 0 is the right answer
        with np.errstate(divide="ignore"):
            out[mode + 1 :] = np.exp(log_pm + np.cumsum(np.log(nbar / k_up)))
    if mode > 0:
        k_down = np.arange(mode, 0, -1)
        out[mode - 1 :: -1] = np.exp(log_pm + np.cumsum(np.log(k_down / nbar)))
    out[mode] = math.exp(log_pm)
    return out


def poisson_cutoff(nbar: float, tol: float = DEFAULT_TOL, cap: int = HARD_CAP) -> tuple[int, float]:
    """Smallest ``N`` whose Poisson(nbar) tail mass beyond ``N`` is below ``tol``.

    Returns ``(N, certified_tail)``. The search starts from the crude bound
    ``nbar + 10 sqrt(nbar) + 20`` (tail beyond it bounded geometrically) and is
    tightened by summing the tail downward.
    """
    if not tol > 0:
        raise InvalidInput(f"truncation tolerance must be > 0, got {tol}")
    nbar = float(nbar)
    if nbar == 0.0:
        return 0, 0.0
    start = int(math.ceil(nbar + 10.0 * math.sqrt(nbar) + 20.0))
    if start > cap:
        start = cap
    ratio = nbar / (start + 1.0)
    pmf = poisson_pmf(nbar, start)
    remainder = pmf[-1] * ratio / (1.0 - ratio) if ratio < 1.0 else math.inf
    if not remainder < tol:
        raise TruncationOverflow(f"Fock cutoff for nbar={nbar:g} exceeds hard cap {cap}")
    # tails[N] = mass strictly above N
    above = np.concatenate([np.cumsum(pmf[:0:-1])[::-1], [0.0]]) + remainder
    n_max = int(np.argmax(above < tol))
    return n_max, float(above[n_max])


def fock_expand(
    alpha: complex, tol: float = DEFAULT_TOL, n_max: int | None = None, cap: int = HARD_CAP
) -> FockVector:
    """Photon-number coefficients of ``|alpha>``.

    ``n_max`` forces the cutoff (used to share one basis across several
    amplitudes); otherwise the certified Poisson cutoff for ``tol`` is used.
    """
    alpha = complex(alpha)
    nbar = abs(alpha) ** 2
    if n_max is None:
        n_max, tail = poisson_cutoff(nbar, tol, cap)
    else:
        if n_max > cap:
            raise TruncationOverflow(f"requested n_max={n_max} exceeds hard cap {cap}")
        tail = max(0.0, 1.0 - math.fsum(poisson_pmf(nbar, n_max)))
    mags = np.sqrt(poisson_pmf(nbar, n_max))
    n = np.arange(n_max + 1)
    coeffs = mags * np.exp(1j * math.atan2(alpha.imag, alpha.real) * n) if nbar > 0 else mags.astype(complex)
    return FockVector(coeffs=coeffs, n_max=n_max, tail_bound=tail)


def coherent_wavefunction(alpha: complex, phi: float, x):
    """Quadrature wavefunction ``<x|alpha>`` for local-oscillator phase ``phi``."""
    at = complex(alpha) * np.exp(-1j * phi)
    x = np.asarray(x, dtype=float)
    return np.pi ** -0.25 * np.exp(0.5 * (at * at - abs(at) ** 2 - (x - SQRT2 * at) ** 2))


def coherent_wavefunction_dphase(alpha: complex, phi: float, x, psi=None):
    """Derivative of ``<x|alpha e^{i t}>`` with respect to ``t`` at ``t = 0``.

    For the branch ``alpha e^{-i lambda}`` the lambda-derivative is the negative
    of this expression evaluated at that amplitude.
    """
    at = complex(alpha) * np.exp(-1j * phi)
    x = np.asarray(x, dtype=float)
    if psi is None:
        psi = coherent_wavefunction(alpha, phi, x)
    return psi * (SQRT2 * x - at) * (1j * at)


def quadrature_window(means, width: float = 12.0) -> tuple[float, float]:
    """Integration window ``[min mu - width sigma, max mu + width sigma]``."""
    means = np.atleast_1d(np.asarray(means, dtype=float))
    return float(means.min() - width * QUADRATURE_SIGMA), float(means.max() + width * QUADRATURE_SIGMA)


def _adaptive_panels(pointwise, owner: np.ndarray, lo: float, hi: float, n: int, tol: np.ndarray, max_depth: int):
    """Locally adaptive Simpson for several integrals at once.

    Each integral ``owner[j]`` starts from ``n`` uniform panels. A panel is
    accepted when its 3- and 5-point Simpson estimates agree to
    ``15 * tol[j] * width / (hi - lo)``; otherwise it is bisected, reusing
    the values already computed. Panels still failing at ``max_depth`` are
    kept; the integral fails only if their summed error estimates exceed
    ``tol[j]``. ``pointwise(x, j)`` evaluates integrand ``j[k]`` at ``x[k]``.
    """
    k = owner.size
    edges = np.linspace(lo, hi, n + 1)
    a = np.tile(edges[:-1], k)
    b = np.tile(edges[1:], k)
    e = np.repeat(np.arange(k), n)
    m = 0.5 * (a + b)
    fe = pointwise(np.tile(edges, k), np.repeat(owner, n + 1)).reshape(k, n + 1)
    fa, fb = fe[:, :-1].ravel(), fe[:, 1:].ravel()
    fm, fl, fr = pointwise(np.concatenate([m, 0.5 * (a + m), 0.5 * (m + b)]), np.tile(owner[e], 3)).reshape(3, -1)
    density = np.asarray(tol, dtype=float) / (hi - lo)
    total = np.zeros(k)
    forced = np.zeros(k)
    for depth in range(max_depth + 1):
        h = b - a
        coarse = h / 6.0 * (fa + 4.0 * fm + fb)
        fine = h / 12.0 * (fa + 4.0 * fl + 2.0 * fm + 4.0 * fr + fb)
        ok = np.abs(fine - coarse) <= 15.0 * density[e] * h
        if depth == max_depth:
            # panels still failing are dominated by rounding noise; keep them and book their error
            forced += np.bincount(e[~ok], np.abs(fine[~ok] - coarse[~ok]) / 15.0, minlength=k)
            ok[:] = True
        total += np.bincount(e[ok], fine[ok] + (fine[ok] - coarse[ok]) / 15.0, minlength=k)
        if ok.all():
            bad = forced > np.asarray(tol, dtype=float)
            if bad.any():
                raise IntegrationNotConverged(
                    f"adaptive Simpson exceeded depth {max_depth} for {int(bad.sum())} integrals"
                )
            return total
        keep = ~ok
        a, b, m, e = a[keep], b[keep], m[keep], e[keep]
        fa, fb, fm, fl, fr = fa[keep], fb[keep], fm[keep], fl[keep], fr[keep]
        # children [a, m] (midpoint l) and [m, b] (midpoint r)
        na, nb = np.concatenate([a, m]), np.concatenate([m, b])
        nm = 0.5 * (na + nb)
        ne = np.concatenate([e, e])
        quarter = pointwise(np.concatenate([0.5 * (na + nm), 0.5 * (nm + nb)]), np.tile(owner[ne], 2))
        fa, fb, fm = np.concatenate([fa, fm]), np.concatenate([fm, fb]), np.concatenate([fl, fr])
        a, b, m, e = na, nb, nm, ne
        fl, fr = quarter[: na.size], quarter[na.size :]


def _pointwise_from_grid(integrand):
    def pointwise(x, elems):
        out = np.empty(x.size)
        for j in np.unique(elems):
            sel = elems == j
            out[sel] = integrand(x[sel], np.array([j]))[0]
        return out

    return pointwise


def integrate_converged(
    integrand: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    size: int = 1,
    rtol: float = 1e-9,
    atol: float = 1e-13,
    n0: int = 64,
    max_refinements: int = 20,
    local_after: int = 5,
    max_depth: int = 50,
    budget: int = 4_000_000,
    pointwise: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Batch of integrals over ``[lo, hi]`` by composite Simpson with interval halving.

    ``integrand(x, active)`` returns shape ``(len(active), len(x))``. Each
    halving evaluates only the new midpoints of entries that have not yet
    converged, fed in slices of at most ``budget`` values. An entry converges
    when successive Simpson estimates agree to ``rtol |I| + atol``. Entries
    still open after ``local_after`` halvings (sharp features such as
    near-zeros of an interference pattern) switch to locally adaptive panel
    bisection, evaluated through ``pointwise(x, elems)`` when supplied.
    """
    if max_refinements < 1:
        raise InvalidInput("max_refinements must be >= 1")

    def sweep(x, active):
        step = max(1, budget // max(active.size, 1))
        total = np.zeros(active.size)
        for s in range(0, x.size, step):
            total += integrand(x[s : s + step], active).sum(axis=1)
        return total

    result = np.full(size, np.nan)
    active = np.arange(size)
    n = n0 if n0 % 2 == 0 else n0 + 1
    x = np.linspace(lo, hi, n + 1)
    ends = sweep(x[[0, -1]], active)
    inner_even = sweep(x[2:-1:2], active)
    inner_odd = sweep(x[1::2], active)
    total = ends + inner_even + inner_odd
    h = (hi - lo) / n
    trap_coarse = 2.0 * h * (ends + inner_even - 0.5 * ends)
    trap = h * (total - 0.5 * ends)
    simpson = (4.0 * trap - trap_coarse) / 3.0
    for level in range(1, max_refinements + 1):
        h *= 0.5
        total = total + sweep(lo + h * (2 * np.arange(n) + 1), active)
        n *= 2
        trap_fine = h * (total - 0.5 * ends)
        refined = (4.0 * trap_fine - trap) / 3.0
        done = np.abs(refined - simpson) <= rtol * np.abs(refined) + atol
        result[active[done]] = refined[done]
        keep = ~done
        active, total, ends, trap, simpson = active[keep], total[keep], ends[keep], trap_fine[keep], refined[keep]
        if active.size == 0:
            return result
        if level >= local_after:
            pw = pointwise if pointwise is not None else _pointwise_from_grid(integrand)
            result[active] = _adaptive_panels(pw, active, lo, hi, n0, rtol * np.abs(simpson) + atol, max_depth)
            return result
    raise IntegrationNotConverged(
        f"Simpson rule did not reach rtol={rtol:g} after {max_refinements} halvings for {active.size} integrals"
    )


def integrate_scalar(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, **kwargs) -> float:
    """Single integral through :func:`integrate_converged`."""
    return float(integrate_converged(lambda x, active: np.asarray(f(x))[None, :], lo, hi, **kwargs)[0])
