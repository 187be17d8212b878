"""Monte-Carlo measurement records and maximum-likelihood estimation of lambda.

Random numbers come from numpy's counter-based Philox generator. Shot ``k``
of an experiment consumes counter draws ``2k`` (accept/reject) and ``2k+1``
(meter outcome), so every shot's randomness is fixed by ``(seed, k)`` alone.
Repeated experiments use child seeds spawned from the master seed.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import EmptyRecord, InvalidInput, WindowTooNarrow
from .fisher import fi_photon, fi_quadrature, pn_distribution, wva_quadrature_distribution
from .optimize import golden_section_max
from .postselect import (
    P_MIN,
    PostSelectedMeter,
    QubitState,
    interference_coefficients,
    postselect_meter,
    relative_phase,
    success_probability,
    success_probability_dlambda,
)
from .qstate import coherent_wavefunction

SCHEMES = ("photon_number", "quadrature")
MLE_TOL = 1e-7
MLE_HALF_WIDTH = 0.1
MLE_GRID = 201
SAMPLER_GRID = 16384


def make_rng(seed) -> np.random.Generator:
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class TrialConfig:
    true_lambda: float
    shots: int
    seed: int = 0
    scheme: str = "photon_number"
    theta_i: float = math.pi / 2
    theta_f: float = 3 * math.pi / 2
    phi0: float = math.pi
    alpha: complex = 2.0
    phi: float = 0.0

    def __post_init__(self):
        if int(self.shots) != self.shots or self.shots < 1:
            raise InvalidInput(f"shots must be a positive integer, got {self.shots!r}")
        if self.scheme not in SCHEMES:
            raise InvalidInput(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")

    @property
    def psi_i(self) -> QubitState:
        return QubitState(self.theta_i, self.phi0)

    @property
    def psi_f(self) -> QubitState:
        return QubitState(self.theta_f, 0.0)

    def meter(self, lam: float | None = None) -> PostSelectedMeter:
        return postselect_meter(self.psi_i, self.psi_f, self.alpha, self.true_lambda if lam is None else lam)

    def echo(self) -> dict:
        a = complex(self.alpha)
        return {
            "true_lambda": self.true_lambda,
            "shots": int(self.shots),
            "seed": int(self.seed),
            "scheme": self.scheme,
            "theta_i": self.theta_i,
            "theta_f": self.theta_f,
            "phi0": self.phi0,
            "alpha": [a.real, a.imag],
            "phi": self.phi,
        }


@dataclass(frozen=True)
class Record:
    """Accepted meter outcomes of one experiment."""

    config: TrialConfig
    shots: int
    outcomes: np.ndarray

    @property
    def accepted(self) -> int:
        return int(self.outcomes.size)


def _photon_sampler(m: PostSelectedMeter):
    cdf = np.cumsum(pn_distribution(m))
    cdf /= cdf[-1]
    return lambda u: np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)


def _quadrature_sampler(m: PostSelectedMeter, phi: float, points: int = SAMPLER_GRID):
    dist = wva_quadrature_distribution(m, phi)
    x = np.linspace(dist.x_lo, dist.x_hi, points + 1)
    cdf = cumulative_simpson(dist(x), x=x, initial=0.0)
    cdf = np.maximum.accumulate(np.clip(cdf, 0.0, None))
    cdf /= cdf[-1]
    return lambda u: np.interp(u, cdf, x)


def simulate_record(cfg: TrialConfig, seed=None) -> Record:
    """Accept each shot with probability ``p_a``, then draw its meter outcome by inverse CDF."""
    m = cfg.meter()
    m.require_feasible(P_MIN)
    rng = make_rng(cfg.seed if seed is None else seed)
    draws = rng.random((int(cfg.shots), 2))
    accept = draws[:, 0] < m.p_a
    sampler = _photon_sampler(m) if cfg.scheme == "photon_number" else _quadrature_sampler(m, cfg.phi)
    return Record(cfg, int(cfg.shots), sampler(draws[accept, 1]))


def _photon_loglik(record: Record, lams: np.ndarray, include_acceptance: bool) -> np.ndarray:
    cfg = record.config
    a, b = interference_coefficients(cfg.psi_i, cfg.psi_f)
    phi0 = relative_phase(cfg.psi_i, cfg.psi_f)
    nbar = abs(complex(cfg.alpha)) ** 2
    values, counts = np.unique(record.outcomes.astype(np.int64), return_counts=True)
    # log P_f(n) = log pbar_n + log K_n(lambda) - log p_a(lambda); pbar_n is lambda-free
    k = a + b * np.cos(2.0 * np.outer(lams, values) + phi0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = np.where(k > 0, np.log(np.where(k > 0, k, 1.0)), -np.inf) @ counts.astype(float)
        pa = np.asarray(success_probability(cfg.psi_i, cfg.psi_f, nbar, lams), dtype=float)
        ll = ll - record.accepted * np.log(pa)
        if include_acceptance:
            ll = ll + record.accepted * np.log(pa) + (record.shots - record.accepted) * np.log1p(-pa)
    return np.where(np.isnan(ll), -np.inf, ll)


def _rejected_loglik(rejected: int, p_a: float) -> float:
    if rejected == 0:
        return 0.0
    return rejected * math.log1p(-p_a) if p_a < 1.0 else -math.inf


def _quadrature_loglik(record: Record, lams: np.ndarray, include_acceptance: bool) -> np.ndarray:
    cfg = record.config
    x = record.outcomes
    out = np.empty(lams.size)
    for i, lam in enumerate(lams):
        m = cfg.meter(float(lam))
        if not m.p_a > P_MIN:
            out[i] = -np.inf
            continue
        amp = m.u1 * coherent_wavefunction(m.branch_minus, cfg.phi, x) + m.u2 * coherent_wavefunction(
            m.branch_plus, cfg.phi, x
        )
        with np.errstate(divide="ignore"):
            ll = float(np.sum(np.log(np.abs(amp) ** 2))) - record.accepted * math.log(m.p_a)
            if include_acceptance:
                ll += record.accepted * math.log(m.p_a) + _rejected_loglik(record.shots - record.accepted, m.p_a)
        out[i] = ll if not math.isnan(ll) else -np.inf
    return out


def log_likelihood(record: Record, lams, include_acceptance: bool = True) -> np.ndarray:
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if record.config.scheme == "photon_number":
        return _photon_loglik(record, lams, include_acceptance)
    return _quadrature_loglik(record, lams, include_acceptance)


def per_shot_fisher(cfg: TrialConfig, lam: float | None = None) -> tuple[float, float, float]:
    """``(p_a, F_a, F_acc)`` at ``lam``: meter FI per accepted outcome and acceptance FI per shot."""
    m = cfg.meter(lam)
    report = fi_photon(m) if cfg.scheme == "photon_number" else fi_quadrature(m, cfg.phi)
    dpa = success_probability_dlambda(cfg.psi_i, cfg.psi_f, m.nbar, m.lam)
    f_acc = dpa * dpa / (m.p_a * (1.0 - m.p_a)) if m.p_a < 1.0 else 0.0
    return m.p_a, report.fisher, f_acc


def crlb(cfg: TrialConfig, accepted: float, shots: float, include_acceptance: bool) -> float:
    """Cramer-Rao bound matching the likelihood variant.

    Meter only: ``1 / (accepted F_a)``. With acceptance counts:
    ``1 / (shots (p_a F_a + F_acc))``.
    """
    p_a, f_a, f_acc = per_shot_fisher(cfg)
    if include_acceptance:
        return 1.0 / (shots * (p_a * f_a + f_acc))
    return 1.0 / (accepted * f_a) if accepted > 0 and f_a > 0 else math.inf


@dataclass(frozen=True)
class EstimationResult:
    lambda_hat: float
    accepted: int
    shots: int
    crlb: float
    include_acceptance: bool
    window: tuple[float, float]
    empirical_variance: float | None = None


def mle_lambda(
    record: Record,
    window: tuple[float, float] | None = None,
    include_acceptance: bool = True,
    tol: float = MLE_TOL,
    grid_points: int = MLE_GRID,
) -> EstimationResult:
    """Maximize the log-likelihood over ``window`` by grid scan plus golden section.

    Raises ``WindowTooNarrow`` when the maximizer sits on a window edge, unless
    the record has fewer than two outcomes (the likelihood is then too flat
    for edge detection to mean anything).
    """
    if record.accepted == 0:
        raise EmptyRecord("the record holds no accepted outcomes")
    cfg = record.config
    if window is None:
        window = (cfg.true_lambda - MLE_HALF_WIDTH, cfg.true_lambda + MLE_HALF_WIDTH)
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise InvalidInput(f"empty search window ({lo}, {hi})")
    grid = np.linspace(lo, hi, grid_points)
    ll = log_likelihood(record, grid, include_acceptance)
    if not np.isfinite(ll).any():
        raise InvalidInput("log-likelihood is -inf across the whole window")
    i = int(np.argmax(ll))
    step = grid[1] - grid[0]
    a, b = max(lo, grid[i] - step), min(hi, grid[i] + step)
    x, fx = golden_section_max(lambda v: log_likelihood(record, v, include_acceptance), a, b, tol)
    lam_hat = float(x[0]) if fx[0] > ll[i] else float(grid[i])
    if record.accepted >= 2 and (lam_hat - lo <= tol or hi - lam_hat <= tol):
        raise WindowTooNarrow(f"likelihood maximizer {lam_hat:.9g} touches the window edge [{lo:.6g}, {hi:.6g}]")
    bound = crlb(cfg, record.accepted, record.shots, include_acceptance)
    return EstimationResult(lam_hat, record.accepted, record.shots, bound, include_acceptance, (lo, hi))


@dataclass(frozen=True)
class CRLBSummary:
    config: TrialConfig
    experiments: int
    include_acceptance: bool
    estimates: np.ndarray
    accepted: np.ndarray
    p_a: float
    crlb: float
    empirical_variance: float | None
    ratio: float | None
    acceptance_fraction: float
    acceptance_sigma: float
    meta: dict = field(default_factory=dict)

    @property
    def acceptance_within_3sigma(self) -> bool:
        return abs(self.acceptance_fraction - self.p_a) <= 3.0 * self.acceptance_sigma


def run_experiments(
    cfg: TrialConfig,
    experiments: int,
    include_acceptance: bool = True,
    window: tuple[float, float] | None = None,
    threads: int = 1,
) -> CRLBSummary:
    """Independent experiments with child seeds spawned from ``cfg.seed``."""
    if experiments < 1:
        raise InvalidInput("experiments must be >= 1")
    seeds = np.random.SeedSequence(int(cfg.seed)).spawn(experiments)

    def one(seed):
        rec = simulate_record(cfg, seed)
        return mle_lambda(rec, window, include_acceptance)

    if threads > 1 and experiments > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]
    est = np.array([r.lambda_hat for r in results])
    acc = np.array([r.accepted for r in results])
    p_a = cfg.meter().p_a
    total_shots = experiments * int(cfg.shots)
    bound = crlb(cfg, float(acc.mean()), float(cfg.shots), include_acceptance)
    var = float(np.var(est, ddof=1)) if experiments >= 2 else None
    frac = float(acc.sum()) / total_shots
    sigma = math.sqrt(p_a * (1.0 - p_a) / total_shots)
    return CRLBSummary(
        config=cfg,
        experiments=experiments,
        include_acceptance=include_acceptance,
        estimates=est,
        accepted=acc,
        p_a=p_a,
        crlb=bound,
        empirical_variance=var,
        ratio=None if var is None else var / bound,
        acceptance_fraction=frac,
        acceptance_sigma=sigma,
    )
