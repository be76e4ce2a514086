# Data pipeline: from two CSV files to supervised LSTM windows.
#
# Run from the repository root:  python3 demos/01_data_pipeline.py

import tempfile
from pathlib import Path

import numpy as np

from tsforge import data
from tsforge.synthetic import write_synthetic

# %%
# Start with a synthetic pair. The secondary market is missing about one day
# in twenty, just like an index that trades on a different holiday calendar.

workdir = Path(tempfile.mkdtemp())
primary_csv, secondary_csv = write_synthetic(workdir, seed=1)
primary = data.load_csv(primary_csv)
secondary = data.load_csv(secondary_csv)
print(f"{primary.name}: {len(primary)} days, {secondary.name}: {len(secondary)} days")

# %%
# Alignment keeps every primary date. A missing secondary value is replaced
# by the most recent earlier one, and the `filled` mask remembers which.

table = data.align_calendars(primary, secondary)
print(f"aligned rows: {len(table)}, carried forward: {int(table.filled.sum())}")
first_gap = int(np.argmax(table.filled))
print(f"first gap on {table.dates[first_gap]}: value {table.secondary[first_gap]:.2f} "
      f"copied from {table.dates[first_gap - 1]}")

# %%
# The default split puts 412 of 501 rows in training. Scalers see only those
# rows, so the test segment can fall outside [0, 1].

ds = data.build_dataset(table)
print(f"train {ds.split_index} rows, test {ds.n_test} rows")
for name, sc in zip(ds.names, ds.scalers):
    print(f"  {name}: min {sc.min:.2f}  max {sc.max:.2f}")
test = ds.features[ds.split_index:]
print(f"scaled test range: {test.min(axis=0).round(3)} .. {test.max(axis=0).round(3)}")

# %%
# Windows of five days of both features predict the next scaled primary close.

X, y = data.make_windows(ds)
print(f"X {X.shape}, y {y.shape}")
assert np.array_equal(X[1, -1], ds.features[5])
assert y[0] == ds.features[5, 0]
print("window 0 target equals row 5 of the primary column")
