"""Residual diagnostics: autocorrelation, Ljung-Box, chi-square tail.

The incomplete gamma routines follow the usual series / Lentz continued
fraction split at ``x = a + 1``.
"""

from __future__ import annotations

import math
import sys

import numpy as np

_EPS = 1e-16
_TINY = sys.float_info.min / sys.float_info.epsilon
_MAX_ITER = 10_000


def _gamma_p_series(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma fraction did not converge (a={a}, x={x})")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammainc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma ``Q(a, x) = 1 - P(a, x)``."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_contfrac(a, x)


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ``P(a, x)``."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return _gamma_p_series(a, x)
    return 1.0 - _gamma_q_contfrac(a, x)


def chi2_sf(x: float, df: float) -> float:
    """Upper tail ``P(X > x)`` of a chi-square with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0:
        return 1.0
    return min(1.0, max(0.0, gammainc_upper(df / 2.0, x / 2.0)))


def chi2_cdf(x: float, df: float) -> float:
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0:
        return 0.0
    return min(1.0, max(0.0, gammainc_lower(df / 2.0, x / 2.0)))


def acf(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags ``1..max_lag`` (lag 0 is 1 by construction)."""
    y = np.asarray(series, dtype=float)
    if not 0 <= max_lag < len(y):
        raise ValueError(f"max_lag must lie in [0, {len(y)}), got {max_lag}")
    dev = y - y.mean()
    denom = float(dev @ dev)
    if denom == 0:
        raise ValueError("autocorrelation of a constant series is undefined")
    return np.array([float(dev[:-k] @ dev[k:]) / denom for k in range(1, max_lag + 1)])


def ljung_box_q(rho, n: int) -> float:
    """``Q = n (n + 2) sum_j rho_j^2 / (n - j)`` for autocorrelations ``rho_1..rho_h``."""
    rho = np.asarray(rho, dtype=float)
    h = len(rho)
    if n <= h:
        raise ValueError(f"need n > h (n={n}, h={h})")
    j = np.arange(1, h + 1)
    return float(n * (n + 2) * np.sum(rho**2 / (n - j)))


def ljung_box(residuals, lags: int, fitted_params: int = 0) -> tuple[float, float]:
    """Ljung-Box statistic and its p-value on ``lags - fitted_params`` degrees of freedom."""
    if lags <= fitted_params:
        raise ValueError(f"lags ({lags}) must exceed fitted parameter count ({fitted_params})")
    resid = np.asarray(residuals, dtype=float)
    n = len(resid)
    if n <= lags:
        raise ValueError(f"need more than {lags} residuals, got {n}")
    q = ljung_box_q(acf(resid, lags), n)
    return q, chi2_sf(q, lags - fitted_params)
