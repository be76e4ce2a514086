# Training the LSTM by hand: gradient check, a sine wave, then market data.
#
# Run from the repository root:  python3 demos/02_lstm_training.py

import numpy as np

from tsforge import data, lstm
from tsforge.synthetic import generate_synthetic
from tsforge.data import align_calendars, build_dataset

# %%
# Backprop through time is written out by hand, so it is worth checking one
# entry against a central difference before trusting it.

rng = np.random.default_rng(0)
params = lstm.init_params(2, 3, rng)
X, y = rng.normal(size=(4, 5, 2)), rng.normal(size=4)
pred, caches = lstm.forward_sequence(params, X)
grads = lstm.backward_through_time(params, caches, lstm.mae_grad(pred, y))

h, ix = 1e-5, (1, 2)
old = params["W_f"][ix]
params["W_f"][ix] = old + h
up = lstm.mae_loss(lstm.forward_sequence(params, X)[0], y)
params["W_f"][ix] = old - h
down = lstm.mae_loss(lstm.forward_sequence(params, X)[0], y)
params["W_f"][ix] = old
print(f"dL/dW_f{ix}: backprop {grads['W_f'][ix]:.8f}, finite difference {(up - down) / (2 * h):.8f}")

# %%
# A noiseless sine wave, period 50, one feature. With 407 windows and a
# batch of 200 there are three Adam steps per epoch.

z = np.sin(2 * np.pi * np.arange(501) / 50)
z = (z - z[:412].min()) / np.ptp(z[:412])
windows = np.lib.stride_tricks.sliding_window_view(z, 5)[:, :, None]
model = lstm.train(lstm.TrainConfig(), windows[:407], z[5:412])
print(f"Adam steps: {model.adam.t}")
for epoch in (0, 9, 49, 99, 199):
    print(f"  epoch {epoch + 1:3d}  MAE {model.history[epoch]:.4f}")
test_mae = lstm.mae_loss(model.predict_scaled(windows[407:496]), z[412:])
print(f"one-step test MAE: {test_mae:.4f}")

# %%
# Now the two-index dataset. One-step mode feeds each day the real history;
# recursive mode feeds back its own forecasts and drifts.

primary, secondary = generate_synthetic(seed=3)
ds = build_dataset(align_calendars(primary, secondary))
model = lstm.fit(lstm.TrainConfig(seed=3), ds)
actual = ds.primary_series("test").closes
for mode in ("one-step", "recursive"):
    f = lstm.predict(model, ds, mode).closes
    print(f"{mode:>9}: RMSE {np.sqrt(np.mean((f - actual) ** 2)):8.1f}  last {f[-1]:9.1f}  "
          f"(actual {actual[-1]:.1f})")
