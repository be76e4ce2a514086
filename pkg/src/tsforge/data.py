"""CSV ingestion, calendar alignment, min-max scaling and supervised windows."""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

#: Train share that maps 501 rows onto the 412/89 split.
DEFAULT_TRAIN_FRACTION = 412 / 501
DEFAULT_LOOKBACK = 5


class DataError(ValueError):
    """Raised for malformed or inconsistent price data."""


@dataclass(frozen=True)
class PriceSeries:
    name: str
    dates: tuple[dt.date, ...]
    closes: np.ndarray

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=float)
        object.__setattr__(self, "closes", closes)
        object.__setattr__(self, "dates", tuple(self.dates))
        if closes.ndim != 1 or len(closes) != len(self.dates):
            raise DataError(f"{self.name}: dates and closes differ in length")
        for a, b in zip(self.dates, self.dates[1:]):
            if b == a:
                raise DataError(f"{self.name}: duplicate date {a.isoformat()}")
            if b < a:
                raise DataError(f"{self.name}: dates not increasing at {b.isoformat()}")
        if not np.all(np.isfinite(closes)):
            raise DataError(f"{self.name}: non-finite close")
        if np.any(closes <= 0):
            bad = self.dates[int(np.argmax(closes <= 0))]
            raise DataError(f"{self.name}: non-positive close on {bad.isoformat()}")

    def __len__(self):
        return len(self.dates)


def load_csv(path, name: str | None = None) -> PriceSeries:
    """Read a ``date,close`` file into a :class:`PriceSeries`.

    Rows may appear in any order; they are sorted by date. Errors name the
    offending line number.
    """
    path = Path(path)
    rows: dict[dt.date, tuple[float, int]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["date", "close"]:
            raise DataError(f"{path}: line 1: expected header 'date,close'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise DataError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            try:
                date = dt.date.fromisoformat(row[0].strip())
                close = float(row[1].strip())
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: unparsable row ({exc})") from None
            if date in rows:
                raise DataError(
                    f"{path}: line {lineno}: duplicate date {date.isoformat()} "
                    f"(first seen on line {rows[date][1]})"
                )
            if not np.isfinite(close) or close <= 0:
                raise DataError(f"{path}: line {lineno}: non-positive close {row[1].strip()}")
            rows[date] = (close, lineno)
    if not rows:
        raise DataError(f"{path}: no observations")
    dates = sorted(rows)
    return PriceSeries(name or path.stem, dates, np.array([rows[d][0] for d in dates]))


def write_csv(series: PriceSeries, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("date,close\n")
        for d, c in zip(series.dates, series.closes):
            fh.write(f"{d.isoformat()},{float(c)!r}\n")


@dataclass(frozen=True)
class AlignedTable:
    """One row per primary date; secondary values carried forward."""

    dates: tuple[dt.date, ...]
    primary: np.ndarray
    secondary: np.ndarray
    filled: np.ndarray  # bool mask: secondary value was carried forward

    def __len__(self):
        return len(self.dates)


def align_calendars(primary: PriceSeries, secondary: PriceSeries) -> AlignedTable:
    """Put ``secondary`` onto ``primary``'s calendar by fill-forward."""
    if not len(primary):
        raise DataError("primary series is empty")
    if not len(secondary) or secondary.dates[0] > primary.dates[0]:
        raise DataError(
            f"no {secondary.name} observation on or before the first "
            f"{primary.name} date {primary.dates[0].isoformat()}"
        )
    sec_ord = np.array([d.toordinal() for d in secondary.dates])
    prim_ord = np.array([d.toordinal() for d in primary.dates])
    # index of latest secondary date <= each primary date
    idx = np.searchsorted(sec_ord, prim_ord, side="right") - 1
    values = secondary.closes[idx]
    filled = sec_ord[idx] != prim_ord
    return AlignedTable(primary.dates, primary.closes.copy(), values, filled)


@dataclass(frozen=True)
class ScalerParams:
    min: float
    max: float

    def __post_init__(self):
        if not (np.isfinite(self.min) and np.isfinite(self.max)):
            raise DataError("scaler bounds must be finite")
        if not self.max > self.min:
            raise DataError(f"degenerate scaler: max ({self.max}) <= min ({self.min})")

    @property
    def span(self) -> float:
        return self.max - self.min


def fit_scaler(train_column) -> ScalerParams:
    values = np.asarray(train_column, dtype=float)
    if values.size < 2 or np.ptp(values) == 0:
        raise DataError("cannot scale a constant column")
    return ScalerParams(float(values.min()), float(values.max()))


def apply_scaler(params: ScalerParams, x):
    return (np.asarray(x, dtype=float) - params.min) / params.span


def invert_scaler(params: ScalerParams, x):
    return np.asarray(x, dtype=float) * params.span + params.min


def split_counts(n_rows: int, fraction: float = DEFAULT_TRAIN_FRACTION) -> tuple[int, int]:
    if not 0 < fraction < 1:
        raise DataError(f"split fraction must lie in (0, 1), got {fraction}")
    n_train = int(round(n_rows * fraction))
    if n_train < 1 or n_train >= n_rows:
        raise DataError(f"split of {n_rows} rows at {fraction} leaves an empty segment")
    return n_train, n_rows - n_train


@dataclass(frozen=True)
class AlignedDataset:
    dates: tuple[dt.date, ...]
    raw: np.ndarray  # (rows, 2): primary close, secondary close
    features: np.ndarray  # same shape, scaled column-wise
    scalers: tuple[ScalerParams, ScalerParams]
    split_index: int
    lookback: int = DEFAULT_LOOKBACK
    names: tuple[str, str] = ("primary", "secondary")

    def __len__(self):
        return len(self.dates)

    @property
    def train_dates(self):
        return self.dates[: self.split_index]

    @property
    def test_dates(self):
        return self.dates[self.split_index :]

    @property
    def n_test(self) -> int:
        return len(self.dates) - self.split_index

    def primary_series(self, segment: str = "all") -> PriceSeries:
        sl = {"all": slice(None), "train": slice(None, self.split_index),
              "test": slice(self.split_index, None)}[segment]
        return PriceSeries(self.names[0], self.dates[sl], self.raw[sl, 0])


def split(table: AlignedTable, fraction: float | None = None, date: dt.date | None = None) -> int:
    """Return the number of training rows for a count or date split."""
    if fraction is not None and date is not None:
        raise DataError("give either a fraction or a date, not both")
    if date is not None:
        if not table.dates[0] <= date <= table.dates[-1]:
            raise DataError(f"split date {date.isoformat()} lies outside the calendar")
        n_train = sum(d < date for d in table.dates)
        if n_train == 0 or n_train == len(table):
            raise DataError(f"split at {date.isoformat()} leaves an empty segment")
        return n_train
    return split_counts(len(table), DEFAULT_TRAIN_FRACTION if fraction is None else fraction)[0]


def build_dataset(
    table: AlignedTable,
    fraction: float | None = None,
    date: dt.date | None = None,
    lookback: int = DEFAULT_LOOKBACK,
    names: tuple[str, str] = ("primary", "secondary"),
) -> AlignedDataset:
    """Split ``table`` and scale each column on its training rows only."""
    if lookback < 1:
        raise DataError("lookback must be >= 1")
    n_train = split(table, fraction=fraction, date=date)
    raw = np.column_stack([table.primary, table.secondary])
    scalers = (fit_scaler(raw[:n_train, 0]), fit_scaler(raw[:n_train, 1]))
    features = np.column_stack([apply_scaler(s, raw[:, j]) for j, s in enumerate(scalers)])
    return AlignedDataset(table.dates, raw, features, scalers, n_train, lookback, names)


def load_dataset(primary_csv, secondary_csv, fraction=None, lookback=DEFAULT_LOOKBACK) -> AlignedDataset:
    primary = load_csv(primary_csv)
    secondary = load_csv(secondary_csv)
    table = align_calendars(primary, secondary)
    return build_dataset(table, fraction=fraction, lookback=lookback,
                         names=(primary.name, secondary.name))


def make_windows(dataset: AlignedDataset) -> tuple[np.ndarray, np.ndarray]:
    """Training samples ``X[i] = features[i:i+L]`` with target ``features[i+L, 0]``.

    Only training rows are used, so no window or target touches the test segment.
    """
    L = dataset.lookback
    n = dataset.split_index
    if n <= L:
        raise DataError(f"training segment has {n} rows, need more than lookback {L}")
    train = dataset.features[:n]
    X = np.lib.stride_tricks.sliding_window_view(train, L, axis=0)[: n - L]
    X = np.ascontiguousarray(X.transpose(0, 2, 1))
    y = train[L:, 0].copy()
    return X, y
