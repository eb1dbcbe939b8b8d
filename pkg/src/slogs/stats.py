"""Log-log regression and jackknife errors for Monte Carlo estimates."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    slope_stderr: float

    def as_dict(self) -> dict:
        return asdict(self)

    def ci(self, z: float = 1.96) -> tuple:
        return (self.slope - z * self.slope_stderr, self.slope + z * self.slope_stderr)


def fit_loglog_slope(points) -> SlopeFit:
    """Weighted least squares of ``log y`` on ``log x``.

    ``points`` holds ``(x, y)`` or ``(x, y, yerr)`` triples.  The error on
    ``log y`` is taken as ``yerr / y``; if every error is zero the fit is
    unweighted.  ``r_squared`` is the weighted coefficient of determination.
    """
    pts = [tuple(p) + (0.0,) * (3 - len(p)) for p in points]
    if len(pts) < 3:
        raise ParameterError("a slope fit needs at least 3 points")
    x, y, e = (np.array(c, dtype=float) for c in zip(*pts))
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ParameterError("log-log fit needs positive finite values")
    if np.any(e < 0):
        raise ParameterError("errors must be nonnegative")
    dx = np.diff(x)
    if not (np.all(dx > 0) or np.all(dx < 0)):
        raise ParameterError("abscissae must be strictly monotone")
    lx, ly = np.log(x), np.log(y)
    sig = e / y
    if np.all(sig > 0):
        w = 1.0 / sig ** 2
    else:
        w = np.ones_like(lx)
    w = w / w.sum()
    mx, my = np.sum(w * lx), np.sum(w * ly)
    sxx = np.sum(w * (lx - mx) ** 2)
    slope = np.sum(w * (lx - mx) * (ly - my)) / sxx
    intercept = my - slope * mx
    resid = ly - (intercept + slope * lx)
    ss_res = np.sum(w * resid ** 2)
    ss_tot = np.sum(w * (ly - my) ** 2)
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    n = len(lx)
    stderr = float(np.sqrt(ss_res / (n - 2) / sxx))
    return SlopeFit(float(slope), float(intercept), float(r2), stderr)


def jackknife(values, statistic=np.mean) -> tuple:
    """Leave-one-out estimate ``(value, standard error)`` of ``statistic`` along axis 0."""
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    full = np.asarray(statistic(v, axis=0), dtype=float)
    if n < 2:
        return full, np.zeros_like(full)
    loo = np.array([statistic(np.delete(v, i, axis=0), axis=0) for i in range(n)])
    se = np.sqrt((n - 1) / n * np.sum((loo - loo.mean(axis=0)) ** 2, axis=0))
    return full, se


def mean_stderr(values) -> tuple:
    """Sample mean and its jackknife standard error (closed form for the mean)."""
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    m = v.mean(axis=0)
    if n < 2:
        return m, np.zeros_like(m)
    return m, v.std(axis=0, ddof=1) / np.sqrt(n)
