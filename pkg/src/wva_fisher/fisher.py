"""Quantum and classical Fisher information of the post-selected meter.

All lambda-derivatives are analytic: branch phases contribute ``-/+ i n`` in
the Fock basis (or the matching wavefunction derivative on the quadrature
axis) and the success probability enters through its closed-form derivative.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._kernels import quadrature_fi_batch
from .errors import IntegrationNotConverged, PostSelectionImpossible
from .optimize import golden_section_max
from .postselect import (
    P_MIN,
    PostSelectedMeter,
    QubitState,
    branch_weights,
    interference_coefficients,
    relative_phase,
    success_probability,
    success_probability_dlambda,
)
from .qstate import (
    DEFAULT_TOL,
    SQRT2,
    coherent_wavefunction,
    coherent_wavefunction_dphase,
    fock_expand,
    integrate_scalar,
    poisson_cutoff,
    poisson_pmf,
    quadrature_window,
)

SKIP_RATIO = 1e-15
DENSITY_FLOOR = 1e-300
# Fock tail mass for information sums: they weight the tail by n^2, so 1e-12 is not enough
FISHER_TOL = 1e-16
QUAD_RTOL = 1e-9
QUAD_ATOL = 1e-13
QUAD_N0 = 64
QUAD_LOCAL_AFTER = 9
QUAD_MAX_DEPTH = 50
PHASE_GRID = 720
TWO_PI = 2.0 * math.pi


class Scheme(str, enum.Enum):
    PHOTON_NUMBER = "photon_number"
    QUADRATURE = "quadrature"
    QFI = "qfi"
    CONVENTIONAL_QUADRATURE = "conventional_quadrature"
    CONVENTIONAL_QFI = "conventional_qfi"
    MIXED_PHOTON_NUMBER = "mixed_photon_number"
    AAV_LEADING = "aav_leading"
    AAV_NEXT = "aav_next"


@dataclass(frozen=True)
class FisherReport:
    scheme: Scheme
    p_a: float
    fisher: float
    meta: dict = field(default_factory=dict)

    @property
    def weighted(self) -> float:
        """Information per attempted trial, ``p_a * fisher``."""
        return self.p_a * self.fisher


def _meta(m: PostSelectedMeter, **extra) -> dict:
    out = {
        "theta_i": m.psi_i.theta,
        "theta_f": m.psi_f.theta,
        "phi0": m.phi0,
        "alpha": m.alpha,
        "nbar": m.nbar,
        "lambda": m.lam,
    }
    out.update(extra)
    return out


def fisher_from_pmf(p: np.ndarray, dp: np.ndarray, skip_ratio: float = SKIP_RATIO) -> float:
    """``sum dp^2 / p`` skipping entries below ``skip_ratio * max(p)``."""
    keep = p >= skip_ratio * p.max()
    return float(np.sum(dp[keep] ** 2 / p[keep]))


# -- photon-number basis ----------------------------------------------------


def qfi_postselected(
    m: PostSelectedMeter, tol: float = FISHER_TOL, p_min: float = P_MIN, n_max: int | None = None
) -> FisherReport:
    """Pure-state QFI ``4(<dPhi|dPhi> - |<Phi|dPhi>|^2)`` of the conditioned meter."""
    m.require_feasible(p_min)
    base = fock_expand(m.alpha, tol, n_max=n_max)
    n = np.arange(base.n_max + 1)
    minus = m.u1 * np.exp(-1j * m.lam * n)
    plus = m.u2 * np.exp(1j * m.lam * n)
    scale = base.coeffs / math.sqrt(m.p_a)
    c = (minus + plus) * scale
    dc = 1j * n * (plus - minus) * scale - 0.5 * (m.dp_a / m.p_a) * c
    norm = np.vdot(c, c).real
    q = 4.0 * (np.vdot(dc, dc).real / norm - abs(np.vdot(c, dc)) ** 2 / norm**2)
    return FisherReport(Scheme.QFI, m.p_a, max(q, 0.0), _meta(m, n_max=base.n_max))


def photon_cutoff(nbars, tol: float = DEFAULT_TOL) -> int:
    """Common Fock cutoff certified for the largest component mean."""
    return poisson_cutoff(float(np.max(nbars)), tol)[0]


def photon_pmf_and_derivative(
    psi_i: QubitState, psi_f: QubitState, lam: float, weights, nbars, n_max: int, p_min: float = P_MIN
):
    """Post-selected photon statistics of a Poisson mixture, and their lambda-derivative.

    Returns ``(P, dP, p_tilde, dp_tilde)`` over ``n = 0..n_max``. A single
    component with weight 1 is the pure coherent meter.
    """
    a, b = interference_coefficients(psi_i, psi_f)
    phi0 = relative_phase(psi_i, psi_f)
    weights = np.atleast_1d(np.asarray(weights, dtype=float))
    nbars = np.atleast_1d(np.asarray(nbars, dtype=float))
    p_tilde = float(np.dot(weights, success_probability(psi_i, psi_f, nbars, lam)))
    if not p_tilde > p_min:
        raise PostSelectionImpossible(f"post-selection probability {p_tilde:.3e} <= {p_min:.0e}")
    dp_tilde = float(np.dot(weights, success_probability_dlambda(psi_i, psi_f, nbars, lam)))
    pbar = np.zeros(n_max + 1)
    for w, nb in zip(weights, nbars):
        pbar += w * poisson_pmf(nb, n_max)
    n = np.arange(n_max + 1)
    angle = 2.0 * lam * n + phi0
    k = a + b * np.cos(angle)
    dk = -2.0 * b * n * np.sin(angle)
    p = k * pbar / p_tilde
    dp = dk * pbar / p_tilde - p * dp_tilde / p_tilde
    return p, dp, p_tilde, dp_tilde


def pn_distribution(
    m: PostSelectedMeter, tol: float = DEFAULT_TOL, p_min: float = P_MIN, n_max: int | None = None
) -> np.ndarray:
    """``P_f(n)`` for ``n = 0..n_max`` (index is the photon number)."""
    m.require_feasible(p_min)
    if n_max is None:
        n_max = photon_cutoff(m.nbar, tol)
    p, _, _, _ = photon_pmf_and_derivative(m.psi_i, m.psi_f, m.lam, [1.0], [m.nbar], n_max, p_min)
    return p


def fi_photon(
    m: PostSelectedMeter,
    tol: float = FISHER_TOL,
    p_min: float = P_MIN,
    skip_ratio: float = SKIP_RATIO,
    n_max: int | None = None,
) -> FisherReport:
    m.require_feasible(p_min)
    if n_max is None:
        n_max = photon_cutoff(m.nbar, tol)
    p, dp, _, _ = photon_pmf_and_derivative(m.psi_i, m.psi_f, m.lam, [1.0], [m.nbar], n_max, p_min)
    return FisherReport(Scheme.PHOTON_NUMBER, m.p_a, fisher_from_pmf(p, dp, skip_ratio), _meta(m, n_max=n_max))


# -- conventional (no post-selection) baselines -----------------------------


def conventional_qfi(alpha: complex) -> FisherReport:
    """QFI of ``|alpha e^{-i lambda}>``: ``4 |alpha|^2``, independent of lambda."""
    nbar = abs(complex(alpha)) ** 2
    return FisherReport(Scheme.CONVENTIONAL_QFI, 1.0, 4.0 * nbar, {"alpha": complex(alpha), "nbar": nbar})


def conventional_quadrature_mean(alpha: complex, phi: float, lam: float) -> float:
    return SQRT2 * (complex(alpha) * np.exp(-1j * (phi + lam))).real


def conventional_quadrature_pdf(alpha: complex, phi: float, lam: float, x):
    """Gaussian homodyne density of ``|alpha e^{-i lambda}>`` (variance 1/2)."""
    mu = conventional_quadrature_mean(alpha, phi, lam)
    x = np.asarray(x, dtype=float)
    return np.exp(-((x - mu) ** 2)) / math.sqrt(math.pi)


def conventional_quadrature_fi(alpha: complex, phi: float, lam: float) -> FisherReport:
    """``4 Im^2(alpha e^{-i phi} e^{-i lambda})``."""
    f = 4.0 * (complex(alpha) * np.exp(-1j * (phi + lam))).imag ** 2
    meta = {"alpha": complex(alpha), "nbar": abs(complex(alpha)) ** 2, "phi": phi, "lambda": lam}
    return FisherReport(Scheme.CONVENTIONAL_QUADRATURE, 1.0, float(f), meta)


def conventional_photon_fi(alpha: complex, lam: float, tol: float = FISHER_TOL) -> FisherReport:
    """Photon counting on ``|alpha e^{-i lambda}>``; Poisson statistics carry no lambda."""
    g = QubitState(0.0, 0.0)
    nbar = abs(complex(alpha)) ** 2
    n_max = photon_cutoff(nbar, tol)
    p, dp, _, _ = photon_pmf_and_derivative(g, g, lam, [1.0], [nbar], n_max)
    meta = {"alpha": complex(alpha), "nbar": nbar, "lambda": lam, "conventional": True}
    return FisherReport(Scheme.PHOTON_NUMBER, 1.0, fisher_from_pmf(p, dp), meta)


# -- homodyne quadrature ----------------------------------------------------


@dataclass(frozen=True)
class QuadratureDistribution:
    evaluator: Callable[[np.ndarray], np.ndarray]
    x_lo: float
    x_hi: float

    def __call__(self, x):
        return self.evaluator(x)


def _window(alpha: complex) -> tuple[float, float]:
    r = SQRT2 * abs(complex(alpha))
    return quadrature_window([-r, r])


def wva_quadrature_distribution(m: PostSelectedMeter, phi: float, p_min: float = P_MIN) -> QuadratureDistribution:
    """Homodyne density ``|u1 <x|alpha e^{-il}> + u2 <x|alpha e^{il}>|^2 / p_a``."""
    m.require_feasible(p_min)
    minus, plus = m.branch_minus, m.branch_plus

    def density(x):
        amp = m.u1 * coherent_wavefunction(minus, phi, x) + m.u2 * coherent_wavefunction(plus, phi, x)
        return np.abs(amp) ** 2 / m.p_a

    mus = [SQRT2 * (minus * np.exp(-1j * phi)).real, SQRT2 * (plus * np.exp(-1j * phi)).real]
    lo, hi = quadrature_window(mus)
    return QuadratureDistribution(density, lo, hi)


def _meter_coefficients(psi_i: QubitState, psi_fs, alpha: complex, lam: float):
    """Per post-selection: branch weights ``(u1, u2)``, p_a and dp_a/dlambda."""
    nbar = abs(complex(alpha)) ** 2
    coef = np.empty((len(psi_fs), 2), dtype=complex)
    pa = np.empty(len(psi_fs))
    dpa = np.empty(len(psi_fs))
    for k, psi_f in enumerate(psi_fs):
        coef[k] = branch_weights(psi_i, psi_f)
        pa[k] = success_probability(psi_i, psi_f, nbar, lam)
        dpa[k] = success_probability_dlambda(psi_i, psi_f, nbar, lam)
    return coef, pa, dpa


def _integrand(amp, damp, pa, dpa):
    # amplitudes are combined before squaring so interference zeros stay accurate
    num = amp.real**2 + amp.imag**2
    dnum = 2.0 * (amp.real * damp.real + amp.imag * damp.imag)
    p = num / pa
    dp = dnum / pa - num * (dpa / pa**2)
    safe = p > DENSITY_FLOOR
    return np.where(safe, dp * dp / np.where(safe, p, 1.0), 0.0)


def _integrate_pairs(alpha, lam, coef, pa, dpa, phis, rows, cols, rtol):
    """FI integral pairing meter ``rows[k]`` with phase ``cols[k]`` (compiled kernel)."""
    alpha = complex(alpha)
    rot = np.exp(-1j * np.asarray(phis, dtype=float)[cols])
    tm = alpha * complex(math.cos(lam), -math.sin(lam)) * rot
    tp = alpha * complex(math.cos(lam), math.sin(lam)) * rot
    lo, hi = _window(alpha)
    values, ok = quadrature_fi_batch(
        lo,
        hi,
        np.ascontiguousarray(coef[rows, 0]),
        np.ascontiguousarray(coef[rows, 1]),
        tm,
        tp,
        pa[rows],
        dpa[rows],
        abs(alpha) ** 2,
        rtol,
        QUAD_ATOL,
        QUAD_N0,
        QUAD_LOCAL_AFTER,
        QUAD_MAX_DEPTH,
    )
    if not ok.all():
        raise IntegrationNotConverged(
            f"homodyne FI integral did not converge for {int((~ok).sum())} of {ok.size} parameter sets"
        )
    return values


def quadrature_fi_grid(
    alpha: complex,
    lam: float,
    psi_i: QubitState,
    psi_fs,
    phis,
    rtol: float = QUAD_RTOL,
    p_min: float = P_MIN,
) -> np.ndarray:
    """Homodyne FI for every (post-selection, phase) pair; shape ``(len(psi_fs), len(phis))``.

    Infeasible post-selections (``p_a <= p_min``) yield NaN rows. Phases are
    folded modulo pi first: shifting the local oscillator by pi flips the sign
    of the measured quadrature, which leaves the FI unchanged.
    """
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    coef, pa, dpa = _meter_coefficients(psi_i, psi_fs, alpha, lam)
    out = np.full((len(psi_fs), phis.size), np.nan)
    feasible = np.flatnonzero(pa > p_min)
    if feasible.size == 0:
        return out
    folded = np.mod(phis, math.pi)
    _, first, inv = np.unique(np.round(folded, 12), return_index=True, return_inverse=True)
    reps = folded[first]
    rows = np.repeat(feasible, reps.size)
    cols = np.tile(np.arange(reps.size), feasible.size)
    values = _integrate_pairs(alpha, lam, coef, pa, dpa, reps, rows, cols, rtol)
    out[feasible] = values.reshape(feasible.size, reps.size)[:, inv.ravel()]
    return out


def quadrature_fi_pairs(
    alpha: complex, lam: float, psi_i: QubitState, psi_fs, phis, rtol: float = QUAD_RTOL, p_min: float = P_MIN
) -> np.ndarray:
    """Homodyne FI for matched ``(psi_fs[k], phis[k])`` pairs; NaN where infeasible."""
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    coef, pa, dpa = _meter_coefficients(psi_i, psi_fs, alpha, lam)
    out = np.full(phis.size, np.nan)
    ok = np.flatnonzero(pa > p_min)
    if ok.size == 0:
        return out
    out[ok] = _integrate_pairs(alpha, lam, coef, pa, dpa, phis, ok, ok, rtol)
    return out


def fi_quadrature(m: PostSelectedMeter, phi: float, rtol: float = QUAD_RTOL, p_min: float = P_MIN) -> FisherReport:
    """Homodyne FI of the conditioned meter at local-oscillator phase ``phi``."""
    m.require_feasible(p_min)
    f = quadrature_fi_pairs(m.alpha, m.lam, m.psi_i, [m.psi_f], [phi], rtol, p_min)[0]
    return FisherReport(Scheme.QUADRATURE, m.p_a, float(f), _meta(m, phi=phi))


def phase_grid(n: int = PHASE_GRID) -> np.ndarray:
    return np.arange(n) * (TWO_PI / n)


def optimize_phases(
    alpha: complex,
    lam: float,
    psi_i: QubitState,
    psi_fs,
    n_grid: int = PHASE_GRID,
    tol: float = 1e-6,
    rtol: float = QUAD_RTOL,
    p_min: float = P_MIN,
):
    """Best local-oscillator phase per post-selection: grid scan, then golden refinement.

    Returns ``(phi_best, fi_best, grid_values)``; the refined optimum never
    falls below the best grid sample.
    """
    phis = phase_grid(n_grid)
    table = quadrature_fi_grid(alpha, lam, psi_i, psi_fs, phis, rtol, p_min)
    best_phi = np.full(len(psi_fs), np.nan)
    best_f = np.full(len(psi_fs), np.nan)
    rows = np.flatnonzero(np.isfinite(table).all(axis=1))
    if rows.size == 0:
        return best_phi, best_f, table
    idx = np.argmax(table[rows], axis=1)
    grid_phi = phis[idx]
    grid_f = table[rows, idx]
    step = TWO_PI / n_grid
    subset = [psi_fs[r] for r in rows]
    x, fx = golden_section_max(
        lambda p: quadrature_fi_pairs(alpha, lam, psi_i, subset, p, rtol, p_min),
        grid_phi - step,
        grid_phi + step,
        tol,
    )
    better = fx > grid_f
    best_phi[rows] = np.where(better, np.mod(x, TWO_PI), grid_phi)
    best_f[rows] = np.where(better, fx, grid_f)
    return best_phi, best_f, table


def optimize_phase(m: PostSelectedMeter, n_grid: int = PHASE_GRID, tol: float = 1e-6) -> FisherReport:
    m.require_feasible()
    phi, f, _ = optimize_phases(m.alpha, m.lam, m.psi_i, [m.psi_f], n_grid, tol)
    return FisherReport(Scheme.QUADRATURE, m.p_a, float(f[0]), _meta(m, phi=float(phi[0]), phi_optimized=True))


def quadrature_fi_reference(m: PostSelectedMeter, phi: float, rtol: float = QUAD_RTOL) -> float:
    """Unbatched homodyne FI built from the public wavefunction helpers."""
    minus, plus = m.branch_minus, m.branch_plus
    lo, hi = _window(m.alpha)

    def integrand(x):
        w1 = coherent_wavefunction(minus, phi, x)
        w2 = coherent_wavefunction(plus, phi, x)
        amp = m.u1 * w1 + m.u2 * w2
        damp = -m.u1 * coherent_wavefunction_dphase(minus, phi, x, w1) + m.u2 * coherent_wavefunction_dphase(
            plus, phi, x, w2
        )
        return _integrand(amp, damp, m.p_a, m.dp_a)

    return integrate_scalar(integrand, lo, hi, rtol=rtol)
