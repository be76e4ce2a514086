# End to end: generate data, run both engines through the CLI, read the tables.
#
# Run from the repository root:  python3 demos/04_full_comparison.py

import tempfile
from pathlib import Path

from tsforge import cli
from tsforge.metrics import read_metrics

# %%
# Everything the command line does is reachable through cli.main, which
# returns the process exit code.

workdir = Path(tempfile.mkdtemp())
assert cli.main(["generate", "--seed", "7", "--out", str(workdir / "data")]) == 0

config = workdir / "run.ini"
config.write_text(
    "[data]\n"
    "primary_csv = data/primary.csv\n"
    "secondary_csv = data/secondary.csv\n"
    "[run]\n"
    "seed = 7\n"
    "out_dir = out\n"
    "[lstm]\n"
    "mode = both\n"
)
assert cli.main(["validate", "--config", str(config)]) == 0
assert cli.main(["run", "--config", str(config)]) == 0

# %%
# The four comparison tables, read back from the flat metrics file.

m = read_metrics(workdir / "out" / "metrics.txt")
engines = ("lstm", "lstm_recursive", "sarima")
rows = (("directional accuracy", "directional_accuracy", "{:.3f}"),
        ("RMSE", "rmse", "{:.1f}"),
        ("overall return", "overall_return", "{:.2%}"),
        ("avg daily return", "avg_daily_return", "{:.6f}"))
print(f"{'':22}" + "".join(f"{e:>16}" for e in engines) + f"{'actual':>16}")
for label, key, fmt in rows:
    cells = [fmt.format(float(m[f"{e}.{key}"])) for e in engines]
    ref = m.get(f"actual.{key}")
    cells.append(fmt.format(float(ref)) if ref else "")
    print(f"{label:22}" + "".join(f"{c:>16}" for c in cells))

# %%
# plot_<engine>.csv holds date, actual and forecast columns for any plotting tool.

print((workdir / "out" / "plot_sarima.csv").read_text().splitlines()[:3])
print((workdir / "out" / "manifest.txt").read_text())
