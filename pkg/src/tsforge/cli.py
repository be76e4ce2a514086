"""Command-line entry point: ``tsforge <subcommand>``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import data, experiment, synthetic

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("tsforge")


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI run file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--primary", dest="primary_csv", help="primary index CSV")
    p.add_argument("--secondary", dest="secondary_csv", help="secondary index CSV")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--lookback", type=int)
    p.add_argument("--mode", choices=experiment.LSTM_MODES)
    p.add_argument("--auto", action="store_true", default=None,
                   help="search p, q by AIC instead of using the fixed orders")


def _run_config(args) -> experiment.RunConfig:
    cfg = experiment.load_config(args.config) if args.config else experiment.RunConfig()
    overrides = {k: getattr(args, k, None) for k in (
        "seed", "out_dir", "primary_csv", "secondary_csv", "epochs", "batch_size",
        "hidden", "lookback", "mode", "auto")}
    return cfg.with_overrides(**overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsforge", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (("run", "fit both engines, forecast and score"),
                        ("fit-sarima", "SARIMA only"),
                        ("train-lstm", "LSTM only"),
                        ("validate", "check a config without running")):
        _add_run_args(sub.add_parser(name, help=help_))

    gen = sub.add_parser("generate", help="write a synthetic primary/secondary CSV pair")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--days", type=int, default=501)
    gen.add_argument("--out", type=Path, required=True)
    gen.add_argument("--correlation", type=float)
    gen.add_argument("--drop-probability", type=float)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "generate":
            regime = {"correlation": args.correlation, "drop_probability": args.drop_probability}
            regime = synthetic.Regime(**{k: v for k, v in regime.items() if v is not None})
            for path in synthetic.write_synthetic(args.out, args.seed, args.days, regime):
                print(path)
            return EXIT_OK

        cfg = _run_config(args)
        if args.command == "validate":
            issues = experiment.validate(cfg)
            for level, msg in issues:
                print(f"{level}: {msg}")
            return EXIT_CONFIG if any(level == "error" for level, _ in issues) else EXIT_OK

        engines = {"run": ("lstm", "sarima"), "fit-sarima": ("sarima",),
                   "train-lstm": ("lstm",)}[args.command]
        for path in experiment.run(cfg, engines).values():
            print(path)
        return EXIT_OK
    except experiment.ConfigError as exc:
        print(f"tsforge: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (data.DataError, OSError) as exc:
        print(f"tsforge: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"tsforge: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"tsforge: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
