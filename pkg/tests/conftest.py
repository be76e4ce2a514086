import datetime as dt

import numpy as np
import pytest

from tsforge.data import PriceSeries

ACCEPTANCE_LINES: list[str] = []


def days(n, start=dt.date(2017, 1, 2)):
    return [start + dt.timedelta(days=i) for i in range(n)]


def series(values, name="s", start=dt.date(2017, 1, 2)):
    return PriceSeries(name, days(len(values), start), np.asarray(values, dtype=float))


def simulate_arma(phi, theta, n, seed, burn=300, mu=0.0):
    """Plain-loop ARMA simulator, kept apart from the fitting code path."""
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n + burn)
    x = np.zeros(n + burn)
    for t in range(n + burn):
        acc = e[t]
        for i, c in enumerate(phi, start=1):
            if t - i >= 0:
                acc += c * x[t - i]
        for j, c in enumerate(theta, start=1):
            if t - j >= 0:
                acc += c * e[t - j]
        x[t] = acc
    return x[burn:] + mu


@pytest.fixture
def record():
    def _record(criterion, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
