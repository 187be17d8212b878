"""Fitted log-log slopes of the Fig. 6 curves over a family of nbar windows.

Shows where the k = 2 (mixed) / k = 1 (pure) scaling holds at lambda = 1e-3
and how it drifts once lambda * nbar is no longer small.
"""

import argparse
import math

import numpy as np

from wva_fisher.fisher import Scheme
from wva_fisher.sweep import PointParams, SweepSpec, loglog_slope, pa_linear_fit, run_sweep

WINDOWS = [(5, 40), (10, 100), (30, 300), (100, 1000), (100, 10000), (1000, 10000)]


def scan(lam: float, points: int, threads: int | None):
    base = PointParams(math.pi / 2, math.pi / 2, math.pi / 2, lam, 1.0, mix_alpha=0.1)
    for lo, hi in WINDOWS:
        grid = tuple(np.logspace(math.log10(lo), math.log10(hi), points))
        rows = run_sweep(SweepSpec("n_bar", grid, base), [Scheme.MIXED_PHOTON_NUMBER, Scheme.PHOTON_NUMBER], threads)
        k = {}
        for label, scheme in (("mixed", Scheme.MIXED_PHOTON_NUMBER), ("pure", Scheme.PHOTON_NUMBER)):
            pts = [(r.value, r.reports[scheme].weighted if r.reports[scheme] else None) for r in rows]
            k[label] = loglog_slope(pts).slope_k
        pa = [(r.value, r.reports[Scheme.MIXED_PHOTON_NUMBER].p_a) for r in rows if r.reports[Scheme.MIXED_PHOTON_NUMBER]]
        b = pa_linear_fit(pa).b
        print(f"{lam:8.0e} [{lo:6g}, {hi:6g}]  mixed k={k['mixed']:6.3f}  pure k={k['pure']:6.3f}  b={b:+.3e}  max lambda*nbar={lam * hi:.3g}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambda", dest="lambdas", type=float, nargs="+", default=[1e-3, 1e-2])
    ap.add_argument("--points", type=int, default=25)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    for lam in args.lambdas:
        scan(lam, args.points, args.threads)
