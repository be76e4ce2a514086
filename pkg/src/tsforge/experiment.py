"""End-to-end experiment: ingest, align, split, fit both engines, score, write."""

from __future__ import annotations

import configparser
import dataclasses
import logging
import math
import platform
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, data, lstm, metrics, sarima

log = logging.getLogger(__name__)

LSTM_MODES = ("one-step", "recursive", "both")
MANIFEST_FILE = "manifest.txt"
SARIMA_SUMMARY_FILE = "sarima_fit.txt"
CHECKPOINT_FILE = "lstm_checkpoint.json"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    primary_csv: str = ""
    secondary_csv: str = ""
    split_fraction: float = data.DEFAULT_TRAIN_FRACTION
    lookback: int = data.DEFAULT_LOOKBACK
    seed: int = 0
    out_dir: str = "tsforge-out"
    epochs: int = 200
    batch_size: int = 200
    hidden: int = 32
    learning_rate: float = 0.01
    shuffle: bool = False
    clip_norm: float | None = None
    mode: str = "one-step"
    p: int = 2
    d: int = 0
    q: int = 2
    P: int = 0
    D: int = 1
    Q: int = 0
    s: int = 250
    auto: bool = False
    max_p: int = 3
    max_q: int = 3
    # names of fields set explicitly by a file or a flag
    explicit: set[str] = field(default_factory=set, repr=False, compare=False)

    def train_config(self) -> lstm.TrainConfig:
        return lstm.TrainConfig(self.epochs, self.batch_size, self.seed, self.hidden,
                                self.lookback, self.learning_rate, self.shuffle, self.clip_norm)

    def sarima_spec(self) -> sarima.SarimaSpec:
        return sarima.SarimaSpec(self.p, self.d, self.q, self.P, self.D, self.Q, self.s)

    def with_overrides(self, **values) -> "RunConfig":
        values = {k: v for k, v in values.items() if v is not None}
        cfg = dataclasses.replace(self, **values)
        cfg.explicit = self.explicit | set(values)
        return cfg


# INI section -> fields it may set
SECTIONS = {
    "data": ("primary_csv", "secondary_csv", "split_fraction", "lookback"),
    "run": ("seed", "out_dir"),
    "lstm": ("epochs", "batch_size", "hidden", "learning_rate", "shuffle", "clip_norm", "mode"),
    "sarima": ("p", "d", "q", "P", "D", "Q", "s", "auto", "max_p", "max_q"),
}
_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "float | None":
            return None if raw.lower() in ("", "none") else float(raw)
        if kind == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind}") from None
    return raw


def load_config(path) -> RunConfig:
    """Read an INI-style run file. Relative CSV paths resolve against its folder."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    # case-sensitive keys: P and p are different orders
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SECTIONS[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            values[key] = _coerce(key, raw)
    for key in ("primary_csv", "secondary_csv", "out_dir"):
        if key in values and not Path(values[key]).is_absolute():
            values[key] = str(path.parent / values[key])
    return RunConfig().with_overrides(**values)


def validate(cfg: RunConfig, check_data: bool = True) -> list[tuple[str, str]]:
    """Problems as ``(level, message)`` with level ``error`` or ``warning``.

    With ``check_data`` the primary CSV is read to check its length.
    """
    issues = []

    def error(msg):
        issues.append(("error", msg))

    for key in ("primary_csv", "secondary_csv"):
        value = getattr(cfg, key)
        if not value:
            error(f"{key} is not set")
        elif not Path(value).is_file():
            error(f"{key} not found: {value}")
    for name in ("epochs", "batch_size", "hidden", "lookback"):
        if getattr(cfg, name) < 1:
            error(f"{name} must be >= 1, got {getattr(cfg, name)}")
    if not cfg.learning_rate > 0:
        error("learning_rate must be positive")
    if cfg.mode not in LSTM_MODES:
        error(f"mode must be one of {LSTM_MODES}, got {cfg.mode!r}")
    if not 0 < cfg.split_fraction < 1:
        error(f"split_fraction must lie in (0, 1), got {cfg.split_fraction}")
    try:
        cfg.sarima_spec()
    except ValueError as exc:
        error(f"sarima orders: {exc}")
    if cfg.max_p < 0 or cfg.max_q < 0:
        error("max_p and max_q must be >= 0")
    out = Path(cfg.out_dir)
    parent = next((p for p in (out, *out.parents) if p.exists()), None)
    if parent is None or not parent.is_dir():
        error(f"output directory not creatable: {out}")

    if check_data and not any(level == "error" for level, _ in issues):
        try:
            n_rows = len(data.load_csv(cfg.primary_csv))
            n_train = data.split_counts(n_rows, cfg.split_fraction)[0]
        except (data.DataError, OSError) as exc:
            error(str(exc))
        else:
            if cfg.D > 0 and n_train < cfg.s + 50:
                issues.append(("warning", f"{n_train} training rows for seasonal period "
                                          f"{cfg.s}; fewer than s + 50"))
            if n_train <= cfg.lookback:
                error(f"{n_train} training rows do not exceed lookback {cfg.lookback}")
    return issues


def manifest_text(cfg: RunConfig, engines: tuple[str, ...]) -> str:
    lines = [f"tsforge={__version__}", f"python={platform.python_version()}",
             f"numpy={np.__version__}", f"scipy={scipy.__version__}",
             f"engines={','.join(engines)}"]
    for f in dataclasses.fields(RunConfig):
        if f.name == "explicit":
            continue
        value = getattr(cfg, f.name)
        value = repr(value) if isinstance(value, float) else str(value)
        marker = "" if f.name in cfg.explicit else "default:"
        lines.append(f"{f.name}={marker}{value}")
    return "\n".join(lines) + "\n"


def _write_forecast(series: data.PriceSeries, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("date,forecast\n")
        for d, v in zip(series.dates, series.closes):
            fh.write(f"{d.isoformat()},{float(v)!r}\n")


def _finite(series: data.PriceSeries) -> data.PriceSeries:
    if not np.all(np.isfinite(series.closes)):
        raise ArithmeticError(f"{series.name}: non-finite forecasts")
    return series


def run(cfg: RunConfig, engines: tuple[str, ...] = ("lstm", "sarima")) -> dict[str, Path]:
    """Run the experiment and write its artifacts under ``cfg.out_dir``.

    Raises :class:`ConfigError`, :class:`tsforge.data.DataError` or
    ``ArithmeticError``. SARIMA non-convergence only warns.
    """
    errors = [msg for level, msg in validate(cfg, check_data=False) if level == "error"]
    if errors:
        raise ConfigError("; ".join(errors))
    dataset = data.load_dataset(cfg.primary_csv, cfg.secondary_csv,
                                fraction=cfg.split_fraction, lookback=cfg.lookback)
    actual = dataset.primary_series("test")
    log.info("%d rows: %d train, %d test", len(dataset), dataset.split_index, dataset.n_test)

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    forecasts: dict[str, data.PriceSeries] = {}

    if "lstm" in engines:
        model = lstm.fit(cfg.train_config(), dataset)
        if not math.isfinite(model.history[-1]):
            raise ArithmeticError("LSTM training diverged")
        modes = ("one-step", "recursive") if cfg.mode == "both" else (cfg.mode,)
        for mode in modes:
            name = "lstm" if mode == "one-step" else "lstm_recursive"
            forecasts[name] = _finite(lstm.predict(model, dataset, mode))
        lstm.save_checkpoint(model, out / CHECKPOINT_FILE)
        written["checkpoint"] = out / CHECKPOINT_FILE

    if "sarima" in engines:
        train = dataset.raw[: dataset.split_index, 0]
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if cfg.auto:
                spec = cfg.sarima_spec()
                fitted = sarima.auto_fit(train, cfg.max_p, cfg.max_q, spec.d, spec.D,
                                         spec.s, spec.P, spec.Q)
            else:
                fitted = sarima.fit(cfg.sarima_spec(), train)
        for w in caught:
            log.warning("%s", w.message)
        path = out / SARIMA_SUMMARY_FILE
        path.write_text(sarima.summary(fitted), encoding="utf-8")
        written["sarima_summary"] = path
        values = sarima.forecast(fitted, dataset.n_test)
        forecasts["sarima"] = _finite(data.PriceSeries("sarima", dataset.test_dates, values))

    for name, series in forecasts.items():
        path = out / f"forecasts_{name}.csv"
        _write_forecast(series, path)
        written[f"forecasts_{name}"] = path

    report = metrics.build_report(forecasts, actual)
    for path in metrics.write_report(report, out):
        written[path.stem] = path
    path = out / MANIFEST_FILE
    path.write_text(manifest_text(cfg, tuple(forecasts)), encoding="utf-8")
    written["manifest"] = path
    return written
