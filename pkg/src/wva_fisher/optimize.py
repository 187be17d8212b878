"""Grid-plus-golden-section maximization, vectorized over independent problems."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f: Callable[[np.ndarray], np.ndarray], lo, hi, tol: float = 1e-6, max_iter: int = 200):
    """Maximize ``f`` on each bracket ``[lo_k, hi_k]`` simultaneously.

    ``f`` maps an array of abscissae (one per problem) to objective values.
    Returns ``(x_best, f_best)`` arrays.
    """
    a = np.array(lo, dtype=float, ndmin=1)
    b = np.array(hi, dtype=float, ndmin=1)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = np.asarray(f(c), dtype=float)
    fd = np.asarray(f(d), dtype=float)
    for _ in range(max_iter):
        if np.all(b - a <= tol):
            break
        left = fc >= fd  # keep [a, d]; ties lean toward smaller x
        a = np.where(left, a, c)
        b = np.where(left, d, b)
        new_c = b - INV_PHI * (b - a)
        new_d = a + INV_PHI * (b - a)
        probe = np.where(left, new_c, new_d)
        fp = np.asarray(f(probe), dtype=float)
        c, d, fc, fd = (
            np.where(left, new_c, d),
            np.where(left, c, new_d),
            np.where(left, fp, fd),
            np.where(left, fc, fp),
        )
    pick_c = fc >= fd
    return np.where(pick_c, c, d), np.where(pick_c, fc, fd)


def grid_then_golden(
    f_scalar: Callable[[float], float], grid, tol: float = 1e-6, periodic: float | None = None
) -> tuple[float, float]:
    """Grid argmax of a scalar objective refined by golden section.

    Non-finite objective values (infeasible points) are ignored. The refined
    value is only accepted if it beats the best grid sample, so the result is
    never below any grid evaluation.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.array([f_scalar(float(x)) for x in grid])
    finite = np.isfinite(values)
    if not finite.any():
        return math.nan, math.nan
    masked = np.where(finite, values, -np.inf)
    i = int(np.argmax(masked))
    best_x, best_f = float(grid[i]), float(values[i])
    if grid.size == 1:
        return best_x, best_f
    if periodic is not None:
        step = grid[1] - grid[0] if i == 0 else grid[i] - grid[i - 1]
        lo, hi = best_x - step, best_x + step
    else:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid.size - 1)]

    def wrapped(xs):
        out = np.array([f_scalar(float(x)) for x in xs])
        return np.where(np.isfinite(out), out, -np.inf)

    x, fx = golden_section_max(wrapped, lo, hi, tol)
    if fx[0] > best_f:
        x0 = float(x[0])
        if periodic is not None:
            x0 = x0 % periodic
        return x0, float(fx[0])
    return best_x, best_f
