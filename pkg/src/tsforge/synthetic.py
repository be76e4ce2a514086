"""Seeded synthetic index pairs for runs without real market data."""

from __future__ import annotations

import datetime as dt
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .data import PriceSeries, write_csv

PRIMARY_FILE = "primary.csv"
SECONDARY_FILE = "secondary.csv"


@dataclass(frozen=True)
class Regime:
    start: str = "2015-12-15"
    primary_level: float = 50_000.0
    primary_drift: float = 0.0003
    primary_vol: float = 0.01
    seasonal_amplitude: float = 0.03
    seasonal_period: float = 250.0
    secondary_level: float = 3_000.0
    secondary_drift: float = 0.0002
    secondary_vol: float = 0.012
    correlation: float = 0.3
    drop_probability: float = 0.05

    def __post_init__(self):
        dt.date.fromisoformat(self.start)
        if self.primary_level <= 0 or self.secondary_level <= 0:
            raise ValueError("starting levels must be positive")
        if self.primary_vol < 0 or self.secondary_vol < 0:
            raise ValueError("volatilities must be non-negative")
        if not -1 <= self.correlation <= 1:
            raise ValueError("correlation must lie in [-1, 1]")
        if not 0 <= self.drop_probability < 1:
            raise ValueError("drop probability must lie in [0, 1)")
        if not 0 <= self.seasonal_amplitude < 1:
            raise ValueError("seasonal amplitude must lie in [0, 1)")
        if self.seasonal_period <= 0:
            raise ValueError("seasonal period must be positive")


def business_days(start: dt.date, n: int) -> list[dt.date]:
    days, d = [], start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


def generate_synthetic(seed: int, n_days: int = 501, regime: Regime = Regime()) -> tuple[PriceSeries, PriceSeries]:
    """Primary: geometric random walk with drift times a sinusoidal season.
    Secondary: correlated geometric random walk with random dates removed
    (the first date is always kept so fill-forward alignment is possible).
    """
    if n_days < 2:
        raise ValueError("need at least two days")
    rng = np.random.default_rng(seed)
    dates = business_days(dt.date.fromisoformat(regime.start), n_days)
    z1 = rng.standard_normal(n_days - 1)
    z2 = rng.standard_normal(n_days - 1)
    rho = regime.correlation
    r1 = regime.primary_drift + regime.primary_vol * z1
    r2 = regime.secondary_drift + regime.secondary_vol * (rho * z1 + np.sqrt(1 - rho**2) * z2)
    t = np.arange(n_days)
    season = 1.0 + regime.seasonal_amplitude * np.sin(2 * np.pi * t / regime.seasonal_period)
    primary = regime.primary_level * np.exp(np.r_[0.0, np.cumsum(r1)]) * season
    secondary = regime.secondary_level * np.exp(np.r_[0.0, np.cumsum(r2)])
    keep = rng.random(n_days) >= regime.drop_probability
    keep[0] = True
    return (
        PriceSeries("primary", dates, primary),
        PriceSeries("secondary", [d for d, k in zip(dates, keep) if k], secondary[keep]),
    )


def write_synthetic(out_dir, seed: int, n_days: int = 501, regime: Regime = Regime()) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    primary, secondary = generate_synthetic(seed, n_days, regime)
    paths = out_dir / PRIMARY_FILE, out_dir / SECONDARY_FILE
    write_csv(primary, paths[0])
    write_csv(secondary, paths[1])
    return paths
