"""Independent reference computations for the test-suite.

Nothing here imports the library's numerics: the joint qubit-meter state is
built by applying the coupling to explicit Fock vectors, factorials go through
``math.lgamma``, derivatives are Richardson-extrapolated finite differences
and integrals use ``scipy.integrate.quad``.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.integrate import quad

# closed forms evaluated by hand; at theta_f = 3pi/2 the interference coefficient
# B = sin(theta_i) sin(theta_f) / 2 is -1/2
PA_FIG3_LAMBDA_0P1 = 0.5 * (1.0 - math.exp(-8.0 * math.sin(0.1) ** 2) * math.cos(4.0 * math.sin(0.2) + math.pi))
PA_FIG3_LAMBDA_0P1_LITERAL = 0.8234145766602537
Q_CM_ALPHA_2 = 16.0
PLATEAU_NBAR_4 = 2.0 * (4.0**2 + 4.0)
FIG5_DELTA = math.sqrt(1.5 * (3.0 - 0.01))
FIG5_VARIANCE = (2.0 / 9.0) * FIG5_DELTA**4 + (8.0 / 3.0) * 0.01 * FIG5_DELTA**2 + 3.0


def qubit(theta: float, phi: float) -> np.ndarray:
    return np.array([math.cos(theta / 2), math.sin(theta / 2) * cmath.exp(1j * phi)])


def fock_coeffs(alpha: complex, n_max: int) -> np.ndarray:
    alpha = complex(alpha)
    r = abs(alpha)
    n = np.arange(n_max + 1)
    if r == 0:
        out = np.zeros(n_max + 1, dtype=complex)
        out[0] = 1.0
        return out
    logmag = -0.5 * r * r + n * math.log(r) - 0.5 * np.array([math.lgamma(k + 1.0) for k in n])
    return np.exp(logmag) * np.exp(1j * cmath.phase(alpha) * n)


def poisson(nbar: float, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1)
    if nbar == 0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    return np.exp(-nbar + n * math.log(nbar) - np.array([math.lgamma(k + 1.0) for k in n]))


def cutoff(nbar: float) -> int:
    return int(nbar + 14.0 * math.sqrt(nbar) + 40.0)


def meter_unnormalized(theta_i, theta_f, phi0, alpha, lam, n_max=None) -> np.ndarray:
    """``<psi_f| exp(i lam sigma_z n) |psi_i>|alpha>`` from explicit joint vectors.

    ``sigma_z = diag(-1, +1)`` on ``(|g>, |e>)``.
    """
    if n_max is None:
        n_max = cutoff(abs(alpha) ** 2)
    psi_i = qubit(theta_i, phi0)
    psi_f = qubit(theta_f, 0.0)
    meter = fock_coeffs(alpha, n_max)
    n = np.arange(n_max + 1)
    joint = np.outer(psi_i, meter)
    joint[0] *= np.exp(-1j * lam * n)
    joint[1] *= np.exp(1j * lam * n)
    return psi_f.conj() @ joint


def pa_series(theta_i, theta_f, phi0, alpha, lam) -> float:
    v = meter_unnormalized(theta_i, theta_f, phi0, alpha, lam)
    return float(np.vdot(v, v).real)


def richardson(f, x: float, h: float):
    """Fourth-order central difference from step ``h`` and ``h/2``."""
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3


def photon_pmf(theta_i, theta_f, phi0, alpha, lam, n_max=None) -> np.ndarray:
    v = meter_unnormalized(theta_i, theta_f, phi0, alpha, lam, n_max)
    p = np.abs(v) ** 2
    return p / p.sum()


def qfi_fd(theta_i, theta_f, phi0, alpha, lam, h=1e-5) -> float:
    n_max = cutoff(abs(alpha) ** 2)

    def state(l):
        v = meter_unnormalized(theta_i, theta_f, phi0, alpha, l, n_max)
        return v / math.sqrt(np.vdot(v, v).real)

    psi = state(lam)
    d = richardson(state, lam, h)
    return float(4.0 * (np.vdot(d, d).real - abs(np.vdot(psi, d)) ** 2))


def photon_fi_fd(theta_i, theta_f, phi0, alpha, lam, h=1e-5) -> float:
    n_max = cutoff(abs(alpha) ** 2)
    p = photon_pmf(theta_i, theta_f, phi0, alpha, lam, n_max)
    dp = richardson(lambda l: photon_pmf(theta_i, theta_f, phi0, alpha, l, n_max), lam, h)
    keep = p > 1e-15 * p.max()
    return float(np.sum(dp[keep] ** 2 / p[keep]))


def wavefunction(alpha: complex, phi: float, x):
    """``pi^{-1/4} exp((a^2 - |a|^2 - (x - sqrt2 a)^2) / 2)`` with ``a = alpha e^{-i phi}``."""
    a = complex(alpha) * cmath.exp(-1j * phi)
    x = np.asarray(x, dtype=float)
    return math.pi**-0.25 * np.exp(0.5 * (a * a - abs(a) ** 2 - (x - math.sqrt(2.0) * a) ** 2))


def quadrature_density(theta_i, theta_f, phi0, alpha, lam, phi, x):
    u1 = math.cos(theta_i / 2) * math.cos(theta_f / 2)
    u2 = math.sin(theta_i / 2) * math.sin(theta_f / 2) * cmath.exp(1j * phi0)
    amp = u1 * wavefunction(alpha * cmath.exp(-1j * lam), phi, x) + u2 * wavefunction(alpha * cmath.exp(1j * lam), phi, x)
    return np.abs(amp) ** 2


def quadrature_fi_quad(theta_i, theta_f, phi0, alpha, lam, phi, h=1e-4) -> float:
    """FI of the homodyne density by adaptive quadrature and finite differences in lambda."""
    span = math.sqrt(2.0) * abs(alpha) + 12.0

    def norm(l):
        return quad(lambda x: quadrature_density(theta_i, theta_f, phi0, alpha, l, phi, x), -span, span, limit=400, epsabs=0, epsrel=1e-13)[0]

    p_l = {l: norm(l) for l in (lam - h, lam - h / 2, lam, lam + h / 2, lam + h)}

    def density(l, x):
        return quadrature_density(theta_i, theta_f, phi0, alpha, l, phi, x) / p_l[l]

    def integrand(x):
        p = density(lam, x)
        if p < 1e-300:
            return 0.0
        d1 = (density(lam + h, x) - density(lam - h, x)) / (2 * h)
        d2 = (density(lam + h / 2, x) - density(lam - h / 2, x)) / h
        d = (4 * d2 - d1) / 3
        return d * d / p

    return quad(integrand, -span, span, limit=800, epsabs=0, epsrel=1e-11)[0]


def ensemble_moments_bruteforce(components) -> tuple[float, float, float]:
    nbar_max = max(abs(a) ** 2 for _, a in components)
    n_max = cutoff(nbar_max)
    n = np.arange(n_max + 1, dtype=float)
    pmf = sum(w * poisson(abs(a) ** 2, n_max) for w, a in components)
    mean = float(np.dot(n, pmf))
    var = float(np.dot((n - mean) ** 2, pmf))
    third = float(np.dot((n - mean) ** 3, pmf))
    return mean, var, third
