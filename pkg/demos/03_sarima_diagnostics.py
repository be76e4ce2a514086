# SARIMA: order search, residual whiteness, and the seasonal model on short data.
#
# Run from the repository root:  python3 demos/03_sarima_diagnostics.py

import warnings

import numpy as np

from tsforge import sarima, stats
from tsforge.synthetic import generate_synthetic

# %%
# An AR(2) process. The search over p, q <= 3 should land on (2, 0) by AIC.

rng = np.random.default_rng(4)
e = rng.standard_normal(800)
x = np.zeros(800)
for t in range(2, 800):
    x[t] = 0.6 * x[t - 1] - 0.4 * x[t - 2] + e[t]
best = sarima.auto_fit(x[300:], max_p=3, max_q=3)
print(best.spec, "phi =", np.round(best.phi, 3), f"AIC {best.aic:.1f}")

# %%
# Residuals of a good fit should look white: Ljung-Box p-values well above 0.05.

for lag, q, p in sarima.ljung_box_table(best):
    print(f"  lag {lag:2d}: Q {q:6.2f}  p {p:.3f}")

# %%
# An under-fitted AR(1) leaves structure behind, and the test notices.

poor = sarima.fit(sarima.SarimaSpec(1, 0, 0), x[300:])
q, p = stats.ljung_box(poor.residuals, 10, fitted_params=1)
print(f"AR(1) on AR(2) data: Q(10) = {q:.1f}, p = {p:.2e}")

# %%
# The seasonal specification with a 250-day period on 412 training days. One
# seasonal difference eats 250 observations, leaving 162, and the fit says so.

primary, _ = generate_synthetic(seed=5)
train = primary.closes[:412]
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    fitted = sarima.fit(sarima.SarimaSpec(2, 0, 2, 0, 1, 0, 250), train)
for w in caught:
    print(f"{w.category.__name__}: {w.message}")
print(sarima.summary(fitted))
path = sarima.forecast(fitted, 89)
print(f"89-day forecast from {path[0]:.1f} to {path[-1]:.1f}; "
      f"actual from {primary.closes[412]:.1f} to {primary.closes[-1]:.1f}")
