"""Parameter sweeps, argmax scans and the regression fits behind the figure curves."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .ensemble import MeterEnsemble, aav_fi_approx, delta_for_nbar, fi_mixed_photon, three_component
from .errors import (
    DivergentWeakValue,
    ExpansionInvalid,
    InsufficientPoints,
    InvalidInput,
    NoFeasiblePoint,
    PostSelectionImpossible,
)
from .fisher import (
    FisherReport,
    Scheme,
    conventional_qfi,
    conventional_quadrature_fi,
    fi_photon,
    fi_quadrature,
    optimize_phase,
    phase_grid,
    qfi_postselected,
)
from .optimize import grid_then_golden
from .postselect import QubitState, postselect_meter

SWEPT = ("lambda", "theta_f", "varphi", "n_bar")
PERIODIC = {"theta_f": 2.0 * math.pi, "varphi": 2.0 * math.pi}
ARGMAX_TOL = 1e-6


def default_angle_grid(points: int = 720) -> np.ndarray:
    return phase_grid(points)


def default_lambda_grid(points: int = 200, lo: float = 1e-4, hi: float = 1.5) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), points)


def default_nbar_grid(points: int = 25, lo: float = 1e2, hi: float = 1e4) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), points)


@dataclass(frozen=True)
class PointParams:
    """One parameter point.

    ``phi=None`` means the homodyne phase is optimized. ``mix_alpha`` sets
    the ensemble rule for mixed-meter quantities: a three-component mixture
    around ``mix_alpha`` with real ``delta`` chosen so the mixture has the
    same mean photon number as ``alpha``.
    """

    theta_i: float
    theta_f: float
    phi0: float
    lam: float
    alpha: complex = 2.0
    phi: float | None = None
    mix_alpha: complex = 0.1

    @property
    def nbar(self) -> float:
        return abs(complex(self.alpha)) ** 2

    @property
    def psi_i(self) -> QubitState:
        return QubitState(self.theta_i, self.phi0)

    @property
    def psi_f(self) -> QubitState:
        return QubitState(self.theta_f, 0.0)

    def ensemble(self) -> MeterEnsemble:
        return three_component(self.mix_alpha, delta_for_nbar(self.mix_alpha, self.nbar))

    def with_value(self, swept: str, value: float) -> "PointParams":
        if swept == "lambda":
            return replace(self, lam=value)
        if swept == "theta_f":
            return replace(self, theta_f=value)
        if swept == "varphi":
            return replace(self, phi=value)
        if swept == "n_bar":
            a = complex(self.alpha)
            phase = a / abs(a) if a != 0 else 1.0
            return replace(self, alpha=math.sqrt(value) * phase)
        raise InvalidInput(f"unknown swept parameter {swept!r}")

    def echo(self) -> dict:
        a = complex(self.alpha)
        m = complex(self.mix_alpha)
        return {
            "theta_i": self.theta_i,
            "theta_f": self.theta_f,
            "phi0": self.phi0,
            "lambda": self.lam,
            "alpha": [a.real, a.imag],
            "phi": "opt" if self.phi is None else self.phi,
            "mix_alpha": [m.real, m.imag],
        }


@dataclass(frozen=True)
class SweepSpec:
    swept: str
    grid: tuple[float, ...]
    fixed: PointParams

    def __post_init__(self):
        if self.swept not in SWEPT:
            raise InvalidInput(f"swept parameter must be one of {SWEPT}, got {self.swept!r}")
        grid = tuple(float(v) for v in self.grid)
        if not grid:
            raise InvalidInput("sweep grid is empty")
        arr = np.array(grid)
        if not np.all(np.isfinite(arr)):
            raise InvalidInput("sweep grid contains non-finite values")
        if np.any(np.diff(arr) <= 0):
            raise InvalidInput("sweep grid must be strictly increasing")
        if self.swept == "n_bar" and arr[0] < 0:
            raise InvalidInput("n_bar grid must be non-negative")
        object.__setattr__(self, "grid", grid)

    def point(self, value: float) -> PointParams:
        return self.fixed.with_value(self.swept, value)


def _aav(p: PointParams, order: str) -> FisherReport:
    e = p.ensemble()
    report = fi_mixed_photon(e, p.psi_i, p.psi_f, p.lam)
    f = aav_fi_approx(e, p.psi_i, p.psi_f, p.lam, order=order)
    scheme = Scheme.AAV_LEADING if order == "leading" else Scheme.AAV_NEXT
    return FisherReport(scheme, report.p_a, f, dict(report.meta, order=order))


def evaluate(p: PointParams, scheme: Scheme) -> FisherReport:
    """One scheme at one point; infeasible post-selection raises."""
    scheme = Scheme(scheme)
    if scheme is Scheme.CONVENTIONAL_QFI:
        return conventional_qfi(p.alpha)
    if scheme is Scheme.CONVENTIONAL_QUADRATURE:
        # optimal phase puts the whole amplitude into the imaginary part
        best = math.atan2(complex(p.alpha).imag, complex(p.alpha).real) - p.lam + math.pi / 2
        return conventional_quadrature_fi(p.alpha, best if p.phi is None else p.phi, p.lam)
    if scheme is Scheme.MIXED_PHOTON_NUMBER:
        return fi_mixed_photon(p.ensemble(), p.psi_i, p.psi_f, p.lam)
    if scheme is Scheme.AAV_LEADING:
        return _aav(p, "leading")
    if scheme is Scheme.AAV_NEXT:
        return _aav(p, "next")
    m = postselect_meter(p.psi_i, p.psi_f, p.alpha, p.lam)
    if scheme is Scheme.QFI:
        return qfi_postselected(m)
    if scheme is Scheme.PHOTON_NUMBER:
        return fi_photon(m)
    if p.phi is None:
        return optimize_phase(m)
    return fi_quadrature(m, p.phi)


# per-point failures that become null markers instead of aborting the sweep
POINT_FAILURES = (PostSelectionImpossible, DivergentWeakValue, ExpansionInvalid)


def evaluate_point(p: PointParams, quantities) -> dict[Scheme, FisherReport | None]:
    out: dict[Scheme, FisherReport | None] = {}
    for q in quantities:
        scheme = Scheme(q)
        try:
            out[scheme] = evaluate(p, scheme)
        except POINT_FAILURES:
            out[scheme] = None
    return out


@dataclass(frozen=True)
class SweepRow:
    value: float
    params: PointParams
    reports: dict = field(default_factory=dict)


def default_threads() -> int:
    env = os.environ.get("WVA_FISHER_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise InvalidInput(f"WVA_FISHER_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise InvalidInput("WVA_FISHER_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def run_sweep(spec: SweepSpec, quantities, threads: int | None = None) -> list[SweepRow]:
    """Evaluate every grid point; rows come back in grid order."""
    quantities = [Scheme(q) for q in quantities]
    threads = default_threads() if threads is None else int(threads)
    if threads < 1:
        raise InvalidInput("threads must be >= 1")
    points = [spec.point(v) for v in spec.grid]

    def work(p):
        return evaluate_point(p, quantities)

    if threads == 1 or len(points) == 1:
        results = [work(p) for p in points]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, points))
    return [SweepRow(v, p, r) for v, p, r in zip(spec.grid, points, results)]


def argmax_scan(spec: SweepSpec, scheme, tol: float = ARGMAX_TOL) -> tuple[float, FisherReport]:
    """Maximize the weighted FI of ``scheme`` over the sweep grid, then refine by golden section."""
    scheme = Scheme(scheme)
    cache: dict[float, FisherReport | None] = {}

    def objective(value: float) -> float:
        if value not in cache:
            cache[value] = evaluate_point(spec.point(value), [scheme])[scheme]
        r = cache[value]
        return math.nan if r is None else r.weighted

    best, _ = grid_then_golden(objective, spec.grid, tol, periodic=PERIODIC.get(spec.swept))
    if math.isnan(best):
        raise NoFeasiblePoint(f"no feasible point for {scheme.value} on the {spec.swept} grid")
    report = cache.get(best)
    if report is None:
        report = evaluate(spec.point(best), scheme)
    return best, report


@dataclass(frozen=True)
class ScalingFit:
    slope_k: float
    intercept: float
    r_squared: float
    fit_range: tuple[float, float]
    n_points: int


@dataclass(frozen=True)
class LinearFit:
    d: float
    b: float
    residual: float
    n_points: int


def loglog_slope(points, fit_range: tuple[float, float] | None = None, min_points: int = 5) -> ScalingFit:
    """Least squares of ``ln(pF)`` on ``ln(nbar)`` over points with positive values in range."""
    arr = np.asarray([(x, y) for x, y in points if x is not None and y is not None], dtype=float).reshape(-1, 2)
    keep = np.isfinite(arr).all(axis=1) & (arr[:, 0] > 0) & (arr[:, 1] > 0)
    if fit_range is not None:
        keep &= (arr[:, 0] >= fit_range[0]) & (arr[:, 0] <= fit_range[1])
    sel = arr[keep]
    if sel.shape[0] < min_points:
        raise InsufficientPoints(f"log-log fit needs >= {min_points} positive points, got {sel.shape[0]}")
    fit = stats.linregress(np.log(sel[:, 0]), np.log(sel[:, 1]))
    r2 = min(max(fit.rvalue**2, 0.0), 1.0)
    rng = fit_range if fit_range is not None else (float(sel[0, 0]), float(sel[-1, 0]))
    return ScalingFit(float(fit.slope), float(fit.intercept), float(r2), (float(rng[0]), float(rng[1])), sel.shape[0])


def pa_linear_fit(points) -> LinearFit:
    """Fit ``p = d - b * nbar``; ``b > 0`` when the success probability falls with ``nbar``."""
    arr = np.asarray([(x, y) for x, y in points if x is not None and y is not None], dtype=float).reshape(-1, 2)
    arr = arr[np.isfinite(arr).all(axis=1)]
    if arr.shape[0] < 2:
        raise InsufficientPoints(f"linear fit needs >= 2 points, got {arr.shape[0]}")
    design = np.column_stack([np.ones(arr.shape[0]), arr[:, 0]])
    coef, *_ = np.linalg.lstsq(design, arr[:, 1], rcond=None)
    resid = arr[:, 1] - design @ coef
    return LinearFit(float(coef[0]), float(-coef[1]), float(np.dot(resid, resid)), arr.shape[0])
