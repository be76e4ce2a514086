"""Single-layer LSTM with a linear read-out, trained by BPTT and Adam.

Cell update, element-wise, with ``z = [h_prev, x]``::

    f = sigmoid(W_f z + b_f)        i = sigmoid(W_i z + b_i)
    g = tanh(W_C z + b_C)           o = sigmoid(W_o z + b_o)
    c = f * c_prev + i * g          h = o * tanh(c)

All functions accept a single vector or a leading batch axis.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .data import AlignedDataset, PriceSeries, ScalerParams, invert_scaler

GATES = ("f", "i", "C", "o")
PARAM_NAMES = ("W_f", "W_i", "W_C", "W_o", "b_f", "b_i", "b_C", "b_o", "W_out", "b_out")
CHECKPOINT_FORMAT = "tsforge-lstm-checkpoint/1"


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    # exp of a non-positive argument only, so neither branch overflows
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def tanh_act(x):
    return np.tanh(x)


def init_params(n_input: int, hidden: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    k = 1.0 / math.sqrt(hidden + n_input)
    params = {}
    for g in GATES:
        params[f"W_{g}"] = rng.uniform(-k, k, size=(hidden, hidden + n_input))
    for g in GATES:
        params[f"b_{g}"] = np.zeros(hidden)
    k_out = 1.0 / math.sqrt(hidden)
    params["W_out"] = rng.uniform(-k_out, k_out, size=(1, hidden))
    params["b_out"] = np.zeros(1)
    return params


def zero_params(n_input: int, hidden: int) -> dict[str, np.ndarray]:
    params = {f"W_{g}": np.zeros((hidden, hidden + n_input)) for g in GATES}
    params.update({f"b_{g}": np.zeros(hidden) for g in GATES})
    params["W_out"] = np.zeros((1, hidden))
    params["b_out"] = np.zeros(1)
    return params


def _dims(params) -> tuple[int, int]:
    hidden, width = params["W_f"].shape
    return hidden, width - hidden


def check_params(params) -> None:
    missing = set(PARAM_NAMES) - set(params)
    if missing:
        raise ValueError(f"missing parameters: {sorted(missing)}")
    hidden, n_input = _dims(params)
    for g in GATES:
        if params[f"W_{g}"].shape != (hidden, hidden + n_input):
            raise ValueError(f"W_{g} has shape {params[f'W_{g}'].shape}, expected {(hidden, hidden + n_input)}")
        if params[f"b_{g}"].shape != (hidden,):
            raise ValueError(f"b_{g} has shape {params[f'b_{g}'].shape}, expected {(hidden,)}")
    if params["W_out"].shape != (1, hidden) or params["b_out"].shape != (1,):
        raise ValueError("read-out shapes do not match hidden size")
    for name in PARAM_NAMES:
        if not np.all(np.isfinite(params[name])):
            raise ValueError(f"{name} has non-finite entries")


@dataclass
class CellState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden: int, batch: int | None = None) -> "CellState":
        shape = (hidden,) if batch is None else (batch, hidden)
        return cls(np.zeros(shape), np.zeros(shape))


def lstm_cell_forward(params, x_t, prev: CellState):
    """One cell step. Returns the next state and the cache used by backprop."""
    hidden, n_input = _dims(params)
    x_t = np.asarray(x_t, dtype=float)
    if x_t.shape[-1] != n_input:
        raise ValueError(f"input has {x_t.shape[-1]} features, params expect {n_input}")
    if prev.h.shape[-1] != hidden or prev.c.shape[-1] != hidden:
        raise ValueError("state size does not match hidden size")
    z = np.concatenate([np.broadcast_to(prev.h, x_t.shape[:-1] + (hidden,)), x_t], axis=-1)
    f = sigmoid(z @ params["W_f"].T + params["b_f"])
    i = sigmoid(z @ params["W_i"].T + params["b_i"])
    g = tanh_act(z @ params["W_C"].T + params["b_C"])
    o = sigmoid(z @ params["W_o"].T + params["b_o"])
    c = f * prev.c + i * g
    tc = tanh_act(c)
    h = o * tc
    cache = {"z": z, "f": f, "i": i, "g": g, "o": o, "c_prev": prev.c, "tanh_c": tc}
    return CellState(h, c), cache


def forward_sequence(params, window):
    """Run a window (``L x features`` or ``batch x L x features``) from a zero state.

    Returns the scaled prediction (scalar or per-batch vector) and the list of
    per-step caches, with the final hidden state appended under ``"h_last"``.
    """
    window = np.asarray(window, dtype=float)
    if window.ndim not in (2, 3):
        raise ValueError("window must be L x features or batch x L x features")
    hidden, n_input = _dims(params)
    if window.shape[-1] != n_input:
        raise ValueError(f"window has {window.shape[-1]} features, params expect {n_input}")
    batch = None if window.ndim == 2 else window.shape[0]
    state = CellState.zeros(hidden, batch)
    caches = []
    for t in range(window.shape[-2]):
        state, cache = lstm_cell_forward(params, window[..., t, :], state)
        caches.append(cache)
    pred = state.h @ params["W_out"][0] + params["b_out"][0]
    caches.append({"h_last": state.h})
    return pred, caches


def mae_loss(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    if p.size == 0 or p.size != t.size:
        raise ValueError(f"need equal non-empty inputs, got {p.size} and {t.size}")
    return float(np.mean(np.abs(p - t)))


def mae_grad(predictions, targets):
    """Gradient of :func:`mae_loss` w.r.t. predictions (subgradient 0 at ties)."""
    p = np.asarray(predictions, dtype=float)
    return np.sign(p - np.asarray(targets, dtype=float)) / p.size


def backward_through_time(params, caches, dpred) -> dict[str, np.ndarray]:
    """Gradients of the loss for every parameter given ``dloss/dprediction``.

    ``dpred`` matches the prediction returned by :func:`forward_sequence`;
    batch contributions are summed.
    """
    hidden, n_input = _dims(params)
    if not caches or "h_last" not in caches[-1]:
        raise ValueError("caches do not come from forward_sequence")
    steps, h_last = caches[:-1], caches[-1]["h_last"]
    if h_last.shape[-1] != hidden or steps[0]["z"].shape[-1] != hidden + n_input:
        raise ValueError("caches do not match parameter shapes")
    dpred = np.asarray(dpred, dtype=float)
    if dpred.shape != h_last.shape[:-1]:
        raise ValueError(f"upstream gradient shape {dpred.shape} does not match predictions")

    grads = {name: np.zeros_like(params[name]) for name in PARAM_NAMES}
    dp = dpred[..., None]
    grads["W_out"][0] = np.sum(dp * h_last, axis=tuple(range(h_last.ndim - 1)))
    grads["b_out"][0] = dpred.sum()

    dh = dp * params["W_out"][0]
    dc = np.zeros_like(dh)
    W_stack = np.concatenate([params[f"W_{g}"] for g in GATES], axis=0)
    for cache in reversed(steps):
        f, i, g, o, tc = cache["f"], cache["i"], cache["g"], cache["o"], cache["tanh_c"]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc**2)
        df = dc * cache["c_prev"]
        di = dc * g
        dg = dc * i
        dc = dc * f
        # pre-activation gradients, stacked in GATES order
        da = np.concatenate(
            [df * f * (1 - f), di * i * (1 - i), dg * (1 - g**2), do * o * (1 - o)], axis=-1
        )
        z = cache["z"]
        if z.ndim == 1:
            dW = np.outer(da, z)
            db = da
        else:
            dW = da.T @ z
            db = da.sum(axis=0)
        for k, gate in enumerate(GATES):
            grads[f"W_{gate}"] += dW[k * hidden : (k + 1) * hidden]
            grads[f"b_{gate}"] += db[k * hidden : (k + 1) * hidden]
        dh = (da @ W_stack)[..., :hidden]
    return grads


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params, **hyper) -> "AdamState":
        state = cls(**hyper)
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
        return state


def adam_step(state: AdamState, params, grads):
    """Bias-corrected Adam update, in place. Returns ``(params, state)``."""
    for k, p in params.items():
        if grads[k].shape != p.shape or state.m[k].shape != p.shape:
            raise ValueError(f"shape mismatch for {k}")
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for k, p in params.items():
        g = grads[k]
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * (g * g)
        p -= state.lr * (state.m[k] / bc1) / (np.sqrt(state.v[k] / bc2) + state.eps)
    return params, state


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 200
    seed: int = 0
    hidden: int = 32
    lookback: int = 5
    learning_rate: float = 0.01
    shuffle: bool = False
    clip_norm: float | None = None

    def __post_init__(self):
        for name in ("epochs", "batch_size", "hidden", "lookback"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ValueError("clip_norm must be positive when set")


@dataclass
class LstmModel:
    config: TrainConfig
    params: dict[str, np.ndarray]
    adam: AdamState
    scalers: tuple[ScalerParams, ...] | None = None
    history: list[float] = field(default_factory=list)

    @property
    def lookback(self) -> int:
        return self.config.lookback

    def predict_scaled(self, windows) -> np.ndarray:
        pred, _ = forward_sequence(self.params, windows)
        return np.atleast_1d(pred)


def batch_gradients(params, X, y):
    pred, caches = forward_sequence(params, X)
    grads = backward_through_time(params, caches, mae_grad(pred, y))
    return grads, mae_loss(pred, y)


def _clip(grads, max_norm):
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm > max_norm:
        for g in grads.values():
            g *= max_norm / norm
    return grads


def train(config: TrainConfig, X, y, scalers=None) -> LstmModel:
    """Fit an :class:`LstmModel` to windows ``X`` (N x L x F) and targets ``y``.

    Each epoch walks consecutive batches of at most ``batch_size`` samples
    (the last one may be short) and takes one Adam step per batch on the
    batch-mean MAE gradient. ``history`` holds the training MAE after each
    epoch.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 3 or len(X) == 0:
        raise ValueError("need at least one sample of shape (L, features)")
    if len(y) != len(X):
        raise ValueError("X and y differ in length")
    if X.shape[1] != config.lookback:
        raise ValueError(f"windows have length {X.shape[1]}, config says {config.lookback}")
    rng = np.random.default_rng(config.seed)
    params = init_params(X.shape[2], config.hidden, rng)
    adam = AdamState.for_params(params, lr=config.learning_rate)
    model = LstmModel(config, params, adam, tuple(scalers) if scalers else None)
    order = np.arange(len(X))
    for _ in range(config.epochs):
        if config.shuffle:
            rng.shuffle(order)
        for start in range(0, len(X), config.batch_size):
            idx = order[start : start + config.batch_size]
            grads, _ = batch_gradients(params, X[idx], y[idx])
            if config.clip_norm is not None:
                _clip(grads, config.clip_norm)
            adam_step(adam, params, grads)
        model.history.append(mae_loss(model.predict_scaled(X), y))
    return model


def fit(config: TrainConfig, dataset: AlignedDataset) -> LstmModel:
    from .data import make_windows

    if config.lookback != dataset.lookback:
        config = TrainConfig(**{**asdict(config), "lookback": dataset.lookback})
    X, y = make_windows(dataset)
    return train(config, X, y, scalers=dataset.scalers)


def predict(model: LstmModel, dataset: AlignedDataset, mode: str = "one-step") -> PriceSeries:
    """Forecast every test date, in index points.

    ``one-step`` feeds observed history into each window; ``recursive`` feeds
    the model's own earlier test forecasts back as the primary feature.
    """
    if not model.history and model.adam.t == 0:
        raise ValueError("model is untrained")
    if mode not in ("one-step", "recursive"):
        raise ValueError(f"unknown prediction mode {mode!r}")
    n_test = dataset.n_test
    if n_test < 1:
        raise ValueError("test segment is empty")
    L, start = model.lookback, dataset.split_index
    if start < L:
        raise ValueError("not enough history before the test segment")
    scalers = model.scalers or dataset.scalers
    feats = dataset.features
    if mode == "one-step":
        windows = np.stack([feats[k - L : k] for k in range(start, start + n_test)])
        scaled = model.predict_scaled(windows)
    else:
        work = feats.copy()
        scaled = np.empty(n_test)
        for j, k in enumerate(range(start, start + n_test)):
            scaled[j] = model.predict_scaled(work[k - L : k])[0]
            work[k, 0] = scaled[j]
    values = invert_scaler(scalers[0], scaled)
    return PriceSeries(f"lstm-{mode}", dataset.test_dates, values)


def save_checkpoint(model: LstmModel, path) -> None:
    """Write config, scalers, weights and optimizer state as JSON text.

    Floats are stored via ``repr`` so a reload is bit-exact.
    """
    doc = {
        "format": CHECKPOINT_FORMAT,
        "config": asdict(model.config),
        "scalers": [asdict(s) for s in model.scalers] if model.scalers else None,
        "params": {k: _encode(model.params[k]) for k in PARAM_NAMES},
        "adam": {
            "lr": model.adam.lr, "beta1": model.adam.beta1, "beta2": model.adam.beta2,
            "eps": model.adam.eps, "t": model.adam.t,
            "m": {k: _encode(model.adam.m[k]) for k in PARAM_NAMES},
            "v": {k: _encode(model.adam.v[k]) for k in PARAM_NAMES},
        },
        "history": [repr(float(h)) for h in model.history],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_checkpoint(path) -> LstmModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not an LSTM checkpoint")
    params = {k: _decode(v) for k, v in doc["params"].items()}
    check_params(params)
    a = doc["adam"]
    adam = AdamState(a["lr"], a["beta1"], a["beta2"], a["eps"], a["t"],
                     {k: _decode(v) for k, v in a["m"].items()},
                     {k: _decode(v) for k, v in a["v"].items()})
    scalers = tuple(ScalerParams(**s) for s in doc["scalers"]) if doc["scalers"] else None
    return LstmModel(TrainConfig(**doc["config"]), params, adam, scalers,
                     [float(h) for h in doc["history"]])


def _encode(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "values": [repr(float(x)) for x in a.ravel()]}


def _decode(d: dict) -> np.ndarray:
    return np.array([float(x) for x in d["values"]], dtype=float).reshape(d["shape"])
