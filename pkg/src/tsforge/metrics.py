"""Forecast scoring and the two-engine comparison report."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import PriceSeries


def _check_aligned(forecast: PriceSeries, actual: PriceSeries) -> None:
    if forecast.dates != actual.dates:
        raise ValueError(f"{forecast.name} and {actual.name} do not share dates")


def directional_accuracy(forecast: PriceSeries, actual: PriceSeries) -> float:
    """Share of days whose predicted move, measured from the previous actual
    close, has the same sign as the realised move. Flat counts as its own sign.
    """
    _check_aligned(forecast, actual)
    if len(actual) < 2:
        raise ValueError("need at least two points")
    prev = actual.closes[:-1]
    hits = np.sign(forecast.closes[1:] - prev) == np.sign(actual.closes[1:] - prev)
    return float(np.mean(hits))


def rmse(forecast: PriceSeries, actual: PriceSeries) -> float:
    _check_aligned(forecast, actual)
    if not len(actual):
        raise ValueError("empty series")
    return float(np.sqrt(np.mean((actual.closes - forecast.closes) ** 2)))


def overall_return(series: PriceSeries) -> float:
    if len(series) < 2:
        raise ValueError("need at least two points")
    first, last = series.closes[0], series.closes[-1]
    if first <= 0:
        raise ValueError("first value must be positive")
    return float((last - first) / first)


def avg_daily_return(series: PriceSeries) -> float:
    """Equivalent constant daily rate: ``(1 + i)^n = prod(1 + i_t)`` over ``n`` returns.

    The product telescopes to ``last / first``.
    """
    x = series.closes
    if len(x) < 2:
        raise ValueError("need at least two points")
    if np.any(x <= 0):
        raise ValueError("non-positive value encountered")
    return math.expm1(math.log(x[-1] / x[0]) / (len(x) - 1))


@dataclass(frozen=True)
class EngineScores:
    engine: str
    forecast: PriceSeries
    directional_accuracy: float
    rmse: float
    overall_return: float
    avg_daily_return: float


@dataclass(frozen=True)
class ForecastReport:
    actual: PriceSeries
    engines: tuple[EngineScores, ...]
    actual_overall_return: float
    actual_avg_daily_return: float

    def __getitem__(self, engine: str) -> EngineScores:
        for e in self.engines:
            if e.engine == engine:
                return e
        raise KeyError(engine)

    def tables(self) -> dict[str, list[tuple[str, float]]]:
        """Rows grouped the way the four comparison tables present them."""
        return {
            "directional_accuracy": [(e.engine, e.directional_accuracy) for e in self.engines],
            "rmse": [(e.engine, e.rmse) for e in self.engines],
            "overall_return": [(e.engine, e.overall_return) for e in self.engines]
            + [("actual", self.actual_overall_return)],
            "avg_daily_return": [(e.engine, e.avg_daily_return) for e in self.engines]
            + [("actual", self.actual_avg_daily_return)],
        }

    def metrics_text(self) -> str:
        lines = []
        for e in self.engines:
            for key in ("directional_accuracy", "rmse", "overall_return", "avg_daily_return"):
                lines.append(f"{e.engine}.{key}={float(getattr(e, key))!r}")
            lines.append(f"{e.engine}.n_forecasts={len(e.forecast)}")
        lines.append(f"actual.overall_return={float(self.actual_overall_return)!r}")
        lines.append(f"actual.avg_daily_return={float(self.actual_avg_daily_return)!r}")
        return "\n".join(lines) + "\n"


def score(engine: str, forecast: PriceSeries, actual: PriceSeries) -> EngineScores:
    return EngineScores(engine, forecast, directional_accuracy(forecast, actual),
                        rmse(forecast, actual), overall_return(forecast),
                        avg_daily_return(forecast))


def build_report(forecasts: dict[str, PriceSeries], actual: PriceSeries) -> ForecastReport:
    """Score each named forecast against ``actual``."""
    for f in forecasts.values():
        _check_aligned(f, actual)
    engines = tuple(score(name, f, actual) for name, f in forecasts.items())
    return ForecastReport(actual, engines, overall_return(actual), avg_daily_return(actual))


def read_metrics(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            out[key] = value
    return out


def write_report(report: ForecastReport, out_dir) -> list[Path]:
    """Write ``metrics.txt`` and one ``plot_<engine>.csv`` per engine."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [out_dir / "metrics.txt"]
    written[0].write_text(report.metrics_text(), encoding="utf-8")
    for e in report.engines:
        path = out_dir / f"plot_{e.engine}.csv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write("date,actual,forecast\n")
            for d, a, f in zip(report.actual.dates, report.actual.closes, e.forecast.closes):
                fh.write(f"{d.isoformat()},{float(a)!r},{float(f)!r}\n")
        written.append(path)
    return written
