"""Classical mixtures of coherent states as the meter.

A mixture ``sum_j w_j |alpha_j><alpha_j|`` enters photon counting only
through its Poisson components, so the post-selected statistics reuse the
pure-state machinery with a weighted Poisson mixture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ExpansionInvalid, InvalidInput
from .fisher import (
    FISHER_TOL,
    SKIP_RATIO,
    FisherReport,
    Scheme,
    fisher_from_pmf,
    photon_cutoff,
    photon_pmf_and_derivative,
)
from .postselect import P_MIN, QubitState, success_probability, weak_value
from .qstate import DEFAULT_TOL, poisson_pmf

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class MeterEnsemble:
    """Weighted coherent-state components ``((w_j, alpha_j), ...)``."""

    components: tuple[tuple[float, complex], ...]

    def __post_init__(self):
        comps = tuple((float(w), complex(a)) for w, a in self.components)
        if not comps:
            raise InvalidInput("an ensemble needs at least one component")
        weights = np.array([w for w, _ in comps])
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise InvalidInput("ensemble weights must be finite and non-negative")
        if abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise InvalidInput(f"ensemble weights sum to {weights.sum():.15g}, not 1")
        object.__setattr__(self, "components", comps)

    @classmethod
    def pure(cls, alpha: complex) -> "MeterEnsemble":
        return cls(((1.0, alpha),))

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.components])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([a for _, a in self.components], dtype=complex)

    @property
    def component_nbars(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def nbar(self) -> float:
        return float(np.dot(self.weights, self.component_nbars))


def three_component(alpha: complex, delta: complex) -> MeterEnsemble:
    """Equal-weight mixture of ``alpha``, ``alpha + delta`` and ``alpha - delta``."""
    alpha, delta = complex(alpha), complex(delta)
    third = 1.0 / 3.0
    return MeterEnsemble(((third, alpha), (third, alpha + delta), (third, alpha - delta)))


def delta_for_nbar(alpha: complex, nbar: float) -> float:
    """Real ``delta >= 0`` giving mean photon number ``nbar = |alpha|^2 + 2 delta^2 / 3``."""
    excess = float(nbar) - abs(complex(alpha)) ** 2
    if excess < 0:
        raise InvalidInput(f"nbar={nbar:g} is below |alpha|^2={abs(complex(alpha)) ** 2:g}")
    return math.sqrt(1.5 * excess)


@dataclass(frozen=True)
class EnsembleMoments:
    n_bar: float
    variance: float
    third_central: float


def ensemble_moments(e: MeterEnsemble) -> EnsembleMoments:
    """Mean, variance and third central moment of the photon number.

    Each component is Poissonian with mean ``mu_j``; its central moments about
    the mixture mean are assembled from ``d_j = mu_j - nbar`` without forming
    raw moments, which would cancel catastrophically at large ``nbar``.
    """
    w = e.weights
    mu = e.component_nbars
    nbar = float(np.dot(w, mu))
    d = mu - nbar
    variance = float(np.dot(w, mu + d * d))
    third = float(np.dot(w, mu + 3.0 * mu * d + d**3))
    return EnsembleMoments(nbar, max(variance, 0.0), third)


def mixed_success_probability(e: MeterEnsemble, psi_i: QubitState, psi_f: QubitState, lam: float) -> float:
    """``p~_a = sum_j w_j p_a(|alpha_j|^2)``."""
    return float(np.dot(e.weights, success_probability(psi_i, psi_f, e.component_nbars, lam)))


def _cutoff(e: MeterEnsemble, tol: float, n_max: int | None) -> int:
    return photon_cutoff(e.component_nbars, tol) if n_max is None else int(n_max)


def mixed_pn_distribution(
    e: MeterEnsemble,
    psi_i: QubitState,
    psi_f: QubitState,
    lam: float,
    tol: float = DEFAULT_TOL,
    p_min: float = P_MIN,
    n_max: int | None = None,
) -> np.ndarray:
    """Post-selected ``P_f(n)``, ``n = 0..n_max``, for the mixed meter."""
    n_max = _cutoff(e, tol, n_max)
    p, _, _, _ = photon_pmf_and_derivative(psi_i, psi_f, lam, e.weights, e.component_nbars, n_max, p_min)
    return p


def fi_mixed_photon(
    e: MeterEnsemble,
    psi_i: QubitState,
    psi_f: QubitState,
    lam: float,
    tol: float = FISHER_TOL,
    p_min: float = P_MIN,
    skip_ratio: float = SKIP_RATIO,
    n_max: int | None = None,
) -> FisherReport:
    """Photon-counting FI of the mixed meter after post-selection; ``p_a`` holds ``p~_a``."""
    n_max = _cutoff(e, tol, n_max)
    p, dp, p_tilde, _ = photon_pmf_and_derivative(psi_i, psi_f, lam, e.weights, e.component_nbars, n_max, p_min)
    meta = {
        "theta_i": psi_i.theta,
        "theta_f": psi_f.theta,
        "phi0": psi_i.phi - psi_f.phi,
        "nbar": e.nbar,
        "lambda": lam,
        "components": len(e.components),
        "n_max": n_max,
    }
    return FisherReport(Scheme.MIXED_PHOTON_NUMBER, p_tilde, fisher_from_pmf(p, dp, skip_ratio), meta)


def aav_fi_approx(
    e: MeterEnsemble,
    psi_i: QubitState,
    psi_f: QubitState,
    lam: float,
    order: str = "leading",
    tol: float = FISHER_TOL,
    n_max: int | None = None,
) -> float:
    """Weak-value expansion of the photon-counting FI for small ``lambda``.

    ``leading``: ``4 (Im w)^2 Var(n)``. ``next``: keeps the first-order
    distortion of the photon statistics,
    ``4 (Im w)^2 sum_n (n - nbar)^2 pbar_n / (1 - 2 lambda Im w (n - nbar))``,
    which requires every denominator on the truncated support to be positive.
    """
    w = weak_value(psi_i, psi_f)
    im = w.imag
    if order == "leading":
        return 4.0 * im * im * ensemble_moments(e).variance
    if order != "next":
        raise InvalidInput(f"order must be 'leading' or 'next', got {order!r}")
    n_max = _cutoff(e, tol, n_max)
    pbar = np.zeros(n_max + 1)
    for weight, nb in zip(e.weights, e.component_nbars):
        pbar += weight * poisson_pmf(nb, n_max)
    dev = np.arange(n_max + 1) - e.nbar
    denom = 1.0 - 2.0 * lam * im * dev
    if np.any(denom <= 0.0):
        worst = float(np.max(2.0 * lam * im * dev))
        raise ExpansionInvalid(
            f"2 lambda Im(w) (n - nbar) reaches {worst:.3g} >= 1 on n <= {n_max}; the expansion does not apply"
        )
    return float(4.0 * im * im * np.sum(dev * dev * pbar / denom))
