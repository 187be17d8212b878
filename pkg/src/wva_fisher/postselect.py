"""Pre/post-selected qubit and the conditioned coherent-state meter.

Sign convention (fixed everywhere): ``sigma_z = |e><e| - |g><g|`` and the
coupling ``U = exp(i lambda sigma_z n)``, so ``|g>`` drags the meter to
``alpha e^{-i lambda}`` and ``|e>`` to ``alpha e^{+i lambda}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergentWeakValue, PostSelectionImpossible
from .qstate import DEFAULT_TOL, FockVector, coherent_overlap, fock_expand

P_MIN = 1e-12
OVERLAP_THRESHOLD = 1e-10


@dataclass(frozen=True)
class QubitState:
    """``cos(theta/2)|g> + sin(theta/2) e^{i phi}|e>``; angles are not range-checked."""

    theta: float
    phi: float = 0.0

    def amplitudes(self) -> tuple[complex, complex]:
        return math.cos(self.theta / 2), math.sin(self.theta / 2) * complex(math.cos(self.phi), math.sin(self.phi))

    def vector(self) -> np.ndarray:
        return np.array(self.amplitudes(), dtype=complex)


def relative_phase(psi_i: QubitState, psi_f: QubitState) -> float:
    return psi_i.phi - psi_f.phi


def branch_weights(psi_i: QubitState, psi_f: QubitState) -> tuple[float, complex]:
    """``(u1, u2)``: amplitudes of the ``alpha e^{-i lambda}`` and ``alpha e^{i lambda}`` branches."""
    phi0 = relative_phase(psi_i, psi_f)
    u1 = math.cos(psi_i.theta / 2) * math.cos(psi_f.theta / 2)
    u2 = math.sin(psi_i.theta / 2) * math.sin(psi_f.theta / 2) * complex(math.cos(phi0), math.sin(phi0))
    return u1, u2


def interference_coefficients(psi_i: QubitState, psi_f: QubitState) -> tuple[float, float]:
    """``(A, B)`` with ``|u1 e^{-i l n} + u2 e^{i l n}|^2 = A + B cos(2 l n + phi0)``."""
    ci, si = math.cos(psi_i.theta), math.sin(psi_i.theta)
    cf, sf = math.cos(psi_f.theta), math.sin(psi_f.theta)
    return 0.5 * (1.0 + ci * cf), 0.5 * si * sf


def success_probability(psi_i: QubitState, psi_f: QubitState, nbar, lam):
    """Angle form of the post-selection probability; vectorizes over ``nbar`` and ``lam``."""
    a, b = interference_coefficients(psi_i, psi_f)
    phi0 = relative_phase(psi_i, psi_f)
    nbar = np.asarray(nbar, dtype=float)
    lam = np.asarray(lam, dtype=float)
    decay = np.exp(-2.0 * nbar * np.sin(lam) ** 2)
    out = a + b * decay * np.cos(nbar * np.sin(2 * lam) + phi0)
    return float(out) if out.ndim == 0 else out


def success_probability_dlambda(psi_i: QubitState, psi_f: QubitState, nbar, lam):
    _, b = interference_coefficients(psi_i, psi_f)
    phi0 = relative_phase(psi_i, psi_f)
    nbar = np.asarray(nbar, dtype=float)
    lam = np.asarray(lam, dtype=float)
    decay = np.exp(-2.0 * nbar * np.sin(lam) ** 2)
    angle = nbar * np.sin(2 * lam) + phi0
    out = -2.0 * b * nbar * decay * (np.sin(2 * lam) * np.cos(angle) + np.cos(2 * lam) * np.sin(angle))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PostSelectedMeter:
    """Unnormalized meter ``u1|alpha e^{-i lam}> + u2|alpha e^{i lam}>`` and its norm ``p_a``."""

    psi_i: QubitState
    psi_f: QubitState
    alpha: complex
    lam: float
    u1: float
    u2: complex
    p_a: float

    @property
    def nbar(self) -> float:
        return abs(self.alpha) ** 2

    @property
    def phi0(self) -> float:
        return relative_phase(self.psi_i, self.psi_f)

    @property
    def branch_minus(self) -> complex:
        return self.alpha * complex(math.cos(self.lam), -math.sin(self.lam))

    @property
    def branch_plus(self) -> complex:
        return self.alpha * complex(math.cos(self.lam), math.sin(self.lam))

    @property
    def dp_a(self) -> float:
        """Derivative of ``p_a`` with respect to ``lambda``."""
        return success_probability_dlambda(self.psi_i, self.psi_f, self.nbar, self.lam)

    def require_feasible(self, p_min: float = P_MIN) -> None:
        if not self.p_a > p_min:
            raise PostSelectionImpossible(
                f"post-selection probability {self.p_a:.3e} <= {p_min:.0e} "
                f"(theta_i={self.psi_i.theta:g}, theta_f={self.psi_f.theta:g}, phi0={self.phi0:g}, lambda={self.lam:g})"
            )


def postselect_meter(psi_i: QubitState, psi_f: QubitState, alpha: complex, lam: float) -> PostSelectedMeter:
    u1, u2 = branch_weights(psi_i, psi_f)
    alpha = complex(alpha)
    minus = alpha * complex(math.cos(lam), -math.sin(lam))
    plus = alpha * complex(math.cos(lam), math.sin(lam))
    p_a = abs(u1) ** 2 + abs(u2) ** 2 + 2.0 * (u1 * u2 * coherent_overlap(minus, plus)).real
    return PostSelectedMeter(psi_i, psi_f, alpha, float(lam), u1, u2, max(p_a, 0.0))


def meter_fock_state(
    m: PostSelectedMeter, tol: float = DEFAULT_TOL, p_min: float = P_MIN, n_max: int | None = None
) -> FockVector:
    """Normalized conditioned meter in the photon-number basis."""
    m.require_feasible(p_min)
    base = fock_expand(m.alpha, tol, n_max=n_max)
    n = np.arange(base.n_max + 1)
    phase = np.exp(-1j * m.lam * n)
    coeffs = (m.u1 * phase + m.u2 * phase.conj()) * base.coeffs / math.sqrt(m.p_a)
    return FockVector(coeffs=coeffs, n_max=base.n_max, tail_bound=base.tail_bound / m.p_a)


def weak_value(psi_i: QubitState, psi_f: QubitState, threshold: float = OVERLAP_THRESHOLD) -> complex:
    """``<psi_f|sigma_z|psi_i> / <psi_f|psi_i>``."""
    vi = psi_i.vector()
    vf = psi_f.vector()
    overlap = np.vdot(vf, vi)
    if abs(overlap) <= threshold:
        raise DivergentWeakValue(f"|<psi_f|psi_i>| = {abs(overlap):.3e} is below {threshold:.0e}")
    sz = np.array([-1.0, 1.0])
    return complex(np.vdot(vf, sz * vi) / overlap)
