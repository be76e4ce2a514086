"""Seasonal ARIMA by differencing plus conditional-sum-of-squares ARMA fitting.

Model on the differenced series ``w = (1-B)^d (1-B^s)^D y``::

    AR(B) * SAR(B^s) * (w_t - mu) = MA(B) * SMA(B^s) * e_t

with ``AR(B) = 1 - sum phi_i B^i`` and ``MA(B) = 1 + sum theta_j B^j``.
Presample values of ``w - mu`` and ``e`` are zero.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from . import stats

MAX_ITER = 2000
SPREAD_TOL = 1e-10
LJUNG_BOX_LAGS = (5, 10, 15, 20)


class DataSufficiencyWarning(UserWarning):
    """The series is short relative to the model being fitted."""


class ConvergenceWarning(UserWarning):
    """The simplex search hit its iteration cap."""


@dataclass(frozen=True)
class SarimaSpec:
    p: int = 0
    d: int = 0
    q: int = 0
    P: int = 0
    D: int = 0
    Q: int = 0
    s: int = 1

    def __post_init__(self):
        orders = (self.p, self.d, self.q, self.P, self.D, self.Q)
        if any(int(o) != o or o < 0 for o in orders):
            raise ValueError(f"orders must be non-negative integers: {orders}")
        if self.s < 1:
            raise ValueError("seasonal period must be >= 1")
        if self.P + self.D + self.Q > 0 and self.s < 2:
            raise ValueError("seasonal terms need a period s >= 2")

    @property
    def n_arma(self) -> int:
        return self.p + self.q + self.P + self.Q

    @property
    def n_params(self) -> int:
        """Estimated coefficients including the intercept."""
        return self.n_arma + 1

    @property
    def lost(self) -> int:
        return self.d + self.D * self.s

    def __str__(self):
        return f"SARIMA({self.p},{self.d},{self.q})x({self.P},{self.D},{self.Q})_{self.s}"


@dataclass
class SarimaFit:
    spec: SarimaSpec
    phi: np.ndarray
    theta: np.ndarray
    Phi: np.ndarray
    Theta: np.ndarray
    intercept: float
    residuals: np.ndarray
    sigma2: float
    aic: float
    training_tail: np.ndarray
    converged: bool = True
    iterations: int = 0
    sse: float = 0.0
    warnings: list[str] = field(default_factory=list)

    @property
    def n_obs(self) -> int:
        return len(self.residuals)

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([self.phi, self.theta, self.Phi, self.Theta])


def _lag_ops(d: int, D: int, s: int) -> list[int]:
    return [1] * d + [s] * D


def difference(series, d: int = 0, D: int = 0, s: int = 1) -> np.ndarray:
    """Apply ``(1-B)^d`` then ``(1-B^s)^D``."""
    y = np.asarray(series, dtype=float)
    if len(y) <= d + D * s:
        raise ValueError(f"series of length {len(y)} too short for d={d}, D={D}, s={s}")
    for lag in _lag_ops(d, D, s):
        y = y[lag:] - y[:-lag]
    return y


def undifference(values, tail, d: int = 0, D: int = 0, s: int = 1) -> np.ndarray:
    """Invert :func:`difference` for values that follow the observations in ``tail``."""
    ops = _lag_ops(d, D, s)
    tail = np.asarray(tail, dtype=float)
    if len(tail) < sum(ops):
        raise ValueError(f"tail of length {len(tail)} too short; need {sum(ops)}")
    levels = [tail]
    for lag in ops:
        levels.append(levels[-1][lag:] - levels[-1][:-lag])
    out = np.asarray(values, dtype=float)
    for lag, level in zip(reversed(ops), reversed(levels[:-1])):
        ext = np.concatenate([level, np.empty(len(out))])
        base = len(level)
        for t in range(len(out)):
            ext[base + t] = out[t] + ext[base + t - lag]
        out = ext[base:]
    return out


def _seasonal_expand(coefs, s: int) -> np.ndarray:
    poly = np.zeros(len(coefs) * s + 1)
    poly[0] = 1.0
    poly[s::s] = coefs
    return poly


def lag_polynomials(phi=(), theta=(), Phi=(), Theta=(), s: int = 1):
    """Full AR and MA lag polynomials (coefficient of ``B^0`` first)."""
    ar = np.convolve(np.r_[1.0, -np.asarray(phi, dtype=float)],
                     _seasonal_expand(-np.asarray(Phi, dtype=float), s))
    ma = np.convolve(np.r_[1.0, np.asarray(theta, dtype=float)],
                     _seasonal_expand(np.asarray(Theta, dtype=float), s))
    return ar, ma


def css_residuals(phi, theta, intercept: float, w, Phi=(), Theta=(), s: int = 1) -> np.ndarray:
    """Residuals of the conditional-sum-of-squares recursion."""
    ar, ma = lag_polynomials(phi, theta, Phi, Theta, s)
    return lfilter(ar, ma, np.asarray(w, dtype=float) - intercept)


def _is_stationary(coefs) -> bool:
    coefs = np.asarray(coefs, dtype=float)
    if coefs.size == 0 or not np.any(coefs):
        return True
    # roots of 1 - c1 u - ... - ck u^k must lie outside the unit circle
    roots = np.roots(np.r_[1.0, -coefs][::-1])
    return bool(np.all(np.abs(roots) > 1.0))


def _unpack(x, spec: SarimaSpec):
    x = np.asarray(x, dtype=float)
    p, q, P = spec.p, spec.q, spec.P
    return x[:p], x[p : p + q], x[p + q : p + q + P], x[p + q + P :]


def _concentrated(x, spec: SarimaSpec, w):
    """Residuals and intercept with the intercept profiled out.

    With zero presample deviations the residuals are affine in the intercept,
    so its least-squares value is closed form.
    """
    phi, theta, Phi, Theta = _unpack(x, spec)
    ar, ma = lag_polynomials(phi, theta, Phi, Theta, spec.s)
    e0 = lfilter(ar, ma, w)
    u = lfilter(ar, ma, np.ones_like(w))
    uu = float(u @ u)
    mu = float(e0 @ u) / uu if uu > 0 else 0.0
    return e0 - mu * u, mu


def fit(spec: SarimaSpec, series) -> SarimaFit:
    """Minimise the residual sum of squares over all coefficients and the intercept."""
    y = np.asarray(series, dtype=float)
    if len(y) <= spec.lost:
        raise ValueError(f"series of length {len(y)} is consumed entirely by differencing")
    w = difference(y, spec.d, spec.D, spec.s)
    n = len(w)
    if n <= spec.p + spec.q:
        raise ValueError(f"only {n} differenced observations for p+q={spec.p + spec.q}")

    notes = []
    if n < 10 * spec.n_params:
        notes.append(f"data-sufficiency: {n} differenced observations for "
                     f"{spec.n_params} parameters (recommended >= {10 * spec.n_params})")
    if spec.D > 0 and len(y) < 2 * spec.s:
        notes.append(f"data-sufficiency: {len(y)} observations cover fewer than two "
                     f"seasonal periods of {spec.s}; {n} remain after differencing")

    sse0 = float(np.sum((w - w.mean()) ** 2)) or 1.0

    def objective(x):
        phi, _, Phi, _ = _unpack(x, spec)
        if not (_is_stationary(phi) and _is_stationary(Phi)):
            return math.inf
        with np.errstate(all="ignore"):
            e, _ = _concentrated(x, spec, w)
            val = float(e @ e) / sse0
        return val if math.isfinite(val) else math.inf

    k = spec.n_arma
    x0 = np.zeros(k)
    converged, iterations = True, 0
    if k:
        simplex = np.vstack([x0, 0.1 * np.eye(k)])
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"maxiter": MAX_ITER, "maxfev": 100 * MAX_ITER,
                                "xatol": math.inf, "fatol": SPREAD_TOL,
                                "initial_simplex": simplex})
        x0 = res.x if res.fun <= objective(np.zeros(k)) else np.zeros(k)
        converged, iterations = bool(res.status == 0), int(res.nit)
        if not converged:
            notes.append(f"convergence: simplex stopped after {iterations} iterations "
                         f"without reaching spread {SPREAD_TOL}")

    phi, theta, Phi, Theta = _unpack(x0, spec)
    if not (_is_stationary(phi) and _is_stationary(Phi)):
        raise ArithmeticError("fitted AR polynomial is not stationary")
    e, mu = _concentrated(x0, spec, w)
    sse = float(e @ e)
    sigma2 = sse / n
    aic = n * math.log(sigma2) + 2 * (spec.n_params + 1) if sigma2 > 0 else -math.inf
    tail_len = min(len(y), max(spec.lost + spec.p + spec.P * spec.s, spec.s))

    for note in notes:
        cat = ConvergenceWarning if note.startswith("convergence") else DataSufficiencyWarning
        warnings.warn(f"{spec}: {note}", cat, stacklevel=2)

    return SarimaFit(spec, phi.copy(), theta.copy(), Phi.copy(), Theta.copy(), mu, e,
                     sigma2, aic, y[-tail_len:].copy(), converged, iterations, sse, notes)


def auto_fit(series, max_p: int = 3, max_q: int = 3, d: int = 0, D: int = 0, s: int = 1,
             P: int = 0, Q: int = 0, min_p: int = 0, min_q: int = 0) -> SarimaFit:
    """Grid search over ``p`` and ``q`` with fixed differencing; lowest AIC wins.

    Ties go to fewer parameters, then lower ``q``. Non-converged or
    non-stationary candidates are skipped.
    """
    grid = [(p, q) for p in range(min_p, max_p + 1) for q in range(min_q, max_q + 1)]
    if not grid:
        raise ValueError("empty order grid")
    best, best_key = None, None
    for p, q in grid:
        spec = SarimaSpec(p, d, q, P, D, Q, s)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DataSufficiencyWarning)
                warnings.simplefilter("ignore", ConvergenceWarning)
                candidate = fit(spec, series)
        except (ValueError, ArithmeticError):
            continue
        if not candidate.converged:
            continue
        key = (candidate.aic, spec.n_params, q)
        if best_key is None or key < best_key:
            best, best_key = candidate, key
    if best is None:
        raise ArithmeticError("no candidate model converged")
    for note in best.warnings:
        warnings.warn(f"{best.spec}: {note}", DataSufficiencyWarning, stacklevel=2)
    return best


def forecast(fitted: SarimaFit, horizon: int) -> np.ndarray:
    """Multi-step forecast in original units; future shocks are zero."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    spec = fitted.spec
    ar, ma = lag_polynomials(fitted.phi, fitted.theta, fitted.Phi, fitted.Theta, spec.s)
    n_ar, n_ma = len(ar) - 1, len(ma) - 1
    tail = fitted.training_tail
    w_hist = difference(tail, spec.d, spec.D, spec.s) if len(tail) > spec.lost else np.empty(0)
    # zero padding stands in for presample values, as in the fitting recursion
    dev = list(np.r_[np.zeros(n_ar), w_hist - fitted.intercept])
    shocks = list(np.r_[np.zeros(n_ma), fitted.residuals])
    out = np.empty(horizon)
    for h in range(horizon):
        val = -sum(ar[k] * dev[-k] for k in range(1, n_ar + 1))
        val += sum(ma[k] * shocks[-k] for k in range(1, n_ma + 1))
        dev.append(val)
        shocks.append(0.0)
        out[h] = val + fitted.intercept
    if spec.lost:
        return undifference(out, fitted.training_tail, spec.d, spec.D, spec.s)
    return out


def standardized_residuals(fitted: SarimaFit) -> np.ndarray:
    if not fitted.sigma2 > 0:
        raise ValueError("residual variance is zero")
    return fitted.residuals / math.sqrt(fitted.sigma2)


def ljung_box_table(fitted: SarimaFit, lags=LJUNG_BOX_LAGS) -> list[tuple[int, float | None, float | None]]:
    """``(lag, Q, p)`` rows; Q and p are ``None`` where the lag is not testable."""
    k = fitted.spec.n_arma
    rows = []
    for h in lags:
        if h <= k or h >= fitted.n_obs:
            rows.append((h, None, None))
        else:
            rows.append((h, *stats.ljung_box(fitted.residuals, h, k)))
    return rows


def summary(fitted: SarimaFit) -> str:
    """Key-value text block describing a fit."""
    def fmt(values):
        return ",".join(repr(float(v)) for v in values)

    spec = fitted.spec
    lines = [
        f"spec={spec}",
        *(f"{name}={getattr(spec, name)}" for name in ("p", "d", "q", "P", "D", "Q", "s")),
        f"phi={fmt(fitted.phi)}",
        f"theta={fmt(fitted.theta)}",
        f"seasonal_phi={fmt(fitted.Phi)}",
        f"seasonal_theta={fmt(fitted.Theta)}",
        f"intercept={fitted.intercept!r}",
        f"n_obs={fitted.n_obs}",
        f"sse={fitted.sse!r}",
        f"sigma2={fitted.sigma2!r}",
        f"aic={fitted.aic!r}",
        f"converged={str(fitted.converged).lower()}",
        f"iterations={fitted.iterations}",
    ]
    for h, q, pval in ljung_box_table(fitted):
        lines.append(f"ljung_box.lag{h}.q={'nan' if q is None else repr(q)}")
        lines.append(f"ljung_box.lag{h}.p={'nan' if pval is None else repr(pval)}")
    for i, note in enumerate(fitted.warnings):
        lines.append(f"warning.{i}={note}")
    return "\n".join(lines) + "\n"
