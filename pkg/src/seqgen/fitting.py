"""Power-law fits on log-log data with bootstrap intervals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError

MIN_POINTS = 4
DEFAULT_RESAMPLES = 200


@dataclass(frozen=True)
class FitReport:
    """Result of a log-log least-squares fit ``log y = intercept + exponent * log x``.

    Attributes
    ----------
    exponent, intercept : float
    ci : (float, float)
        Bootstrap percentile interval for the exponent (95 % by default).
    residual_norm : float
        Euclidean norm of the log-space residuals.
    window : (float, float)
        Smallest and largest ``x`` that entered the fit.
    n_points : int
    """

    exponent: float
    intercept: float
    ci: tuple
    residual_norm: float
    window: tuple
    n_points: int

    def within(self, target: float, tol: float) -> bool:
        return abs(self.exponent - target) <= tol

    def overlaps(self, target: float, tol: float) -> bool:
        """True if the bootstrap interval meets ``[target - tol, target + tol]``."""
        lo, hi = self.ci
        return hi >= target - tol and lo <= target + tol

    def as_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "intercept": self.intercept,
            "ci_low": self.ci[0],
            "ci_high": self.ci[1],
            "residual_norm": self.residual_norm,
            "window_low": self.window[0],
            "window_high": self.window[1],
            "n_points": self.n_points,
        }

    def __str__(self):
        return (f"exponent {self.exponent:+.4f}  CI [{self.ci[0]:+.4f}, {self.ci[1]:+.4f}]  "
                f"window [{self.window[0]:g}, {self.window[1]:g}]  n={self.n_points}  "
                f"rss={self.residual_norm:.3e}")


def _loglog(x, y):
    lx, ly = np.log(x), np.log(y)
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = ly - (icpt + slope * lx)
    return float(slope), float(icpt), float(np.linalg.norm(resid))


def fit_exponent(x, y, window=None, samples=None, n_boot: int = DEFAULT_RESAMPLES,
                 level: float = 0.95, seed=0) -> FitReport:
    """Fit ``y ~ x**exponent``.

    Parameters
    ----------
    x, y : array_like
        Abscissae and (mean) ordinates, all positive inside the window.
    window : (lo, hi), optional
        Only points with ``lo <= x <= hi`` are used.
    samples : array_like, shape (n_trials, len(x)), optional
        Per-trial observations whose column means are ``y``.  When given,
        the bootstrap resamples trials (ensemble bootstrap); otherwise it
        resamples points.
    n_boot : int
        Number of bootstrap resamples, at least 200.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    mask = np.ones(x.size, dtype=bool)
    if window is not None:
        mask &= (x >= window[0]) & (x <= window[1])
    if mask.sum() < MIN_POINTS:
        raise InsufficientDataError(f"need at least {MIN_POINTS} points in the fit window, got {int(mask.sum())}")
    xs, ys = x[mask], y[mask]
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise InsufficientDataError("log-log fit needs positive values")
    slope, icpt, rss = _loglog(xs, ys)
    n_boot = max(int(n_boot), DEFAULT_RESAMPLES)
    rng = np.random.default_rng(seed)
    boots = []
    if samples is not None:
        data = np.asarray(samples, dtype=float)[:, mask]
        n = data.shape[0]
        for _ in range(n_boot):
            m = data[rng.integers(0, n, n)].mean(axis=0)
            if np.all(m > 0):
                boots.append(_loglog(xs, m)[0])
    else:
        n = xs.size
        for _ in range(n_boot):
            idx = rng.integers(0, n, n)
            if np.unique(xs[idx]).size < 2:
                continue
            boots.append(_loglog(xs[idx], ys[idx])[0])
    if boots:
        a = (1 - level) / 2
        lo, hi = np.quantile(boots, [a, 1 - a])
        lo, hi = min(lo, slope), max(hi, slope)
    else:
        lo = hi = slope
    return FitReport(slope, icpt, (float(lo), float(hi)), rss,
                     (float(xs.min()), float(xs.max())), int(xs.size))


def fit_log_law(x, y):
    """Least squares ``y = a + b log x``; returns ``(a, b, rss)``."""
    lx = np.log(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    b, a = np.polyfit(lx, y, 1)
    return float(a), float(b), float(np.sum((y - a - b * lx) ** 2))


def fit_power_law(x, y):
    """Least squares ``y = c x**p`` in linear space, started from the log-log fit.

    Returns ``(c, p, rss)``.
    """
    from scipy.optimize import curve_fit

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p0, c0 = np.polyfit(np.log(x), np.log(np.clip(y, 1e-300, None)), 1)
    try:
        (c, p), _ = curve_fit(lambda t, c, p: c * t ** p, x, y, p0=(np.exp(c0), p0), maxfev=20000)
    except RuntimeError:
        c, p = np.exp(c0), p0
    return float(c), float(p), float(np.sum((y - c * x ** p) ** 2))
