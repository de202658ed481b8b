"""Convergence-curve helpers shared by the demo drivers and the test suite."""

from __future__ import annotations

import numpy as np

__all__ = ["fit_loglog"]


def fit_loglog(x, err, floor: float = 1e-12, max_points: int | None = None):
    """Least-squares slope of log(err) vs log(x) on the asymptotic side.

    Saturated points are dropped first: anything at the absolute floor
    (err <= floor) or within 3x of the smallest observed error, where the
    curve has flattened onto a secondary error source.  The fit then uses
    the asymptotic half of the remaining sweep (largest x), at least 4 and
    at most `max_points` (default 10) points.  Returns
    (slope, intercept, residual_rms, n_points_used).
    """
    x = np.asarray(x, dtype=float)
    err = np.asarray(err, dtype=float)
    keep = err > max(floor, 3.0 * float(err.min()))
    if keep.sum() < 4:  # nearly flat sweep: fall back to the absolute floor
        keep = err > floor
    x, err = x[keep], err[keep]
    if x.size < 2:
        raise ValueError("not enough points above the floor to fit a slope")
    cap = 10 if max_points is None else max_points
    use = min(cap, max(4, x.size // 2), x.size)
    order = np.argsort(x)
    x, err = x[order][-use:], err[order][-use:]
    lx, le = np.log(x), np.log(err)
    coef = np.polyfit(lx, le, 1)
    fitted = np.polyval(coef, lx)
    rms = float(np.sqrt(np.mean((fitted - le) ** 2)))
    return float(coef[0]), float(coef[1]), rms, int(x.size)
