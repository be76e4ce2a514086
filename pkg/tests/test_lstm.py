import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsforge.data import AlignedTable, build_dataset, make_windows
from tsforge.lstm import (
    PARAM_NAMES, AdamState, CellState, LstmModel, TrainConfig, adam_step, backward_through_time,
    check_params, fit, forward_sequence, init_params, load_checkpoint, lstm_cell_forward, mae_grad,
    mae_loss, predict, save_checkpoint, sigmoid, tanh_act, train, zero_params,
)


def random_instance(rng, hidden, L, features=2, batch=3):
    params = init_params(features, hidden, rng)
    for name in params:
        params[name] = params[name] + rng.normal(0, 0.5, params[name].shape)
    return params, rng.normal(size=(batch, L, features)), rng.normal(size=batch)


def numeric_grad(params, loss, h=1e-5):
    grads = {}
    for name, p in params.items():
        g = np.zeros_like(p)
        for ix in np.ndindex(p.shape):
            old = p[ix]
            p[ix] = old + h
            up = loss()
            p[ix] = old - h
            down = loss()
            p[ix] = old
            g[ix] = (up - down) / (2 * h)
        grads[name] = g
    return grads


def sine_dataset(n=501, period=50, secondary=None):
    t = np.arange(n)
    s = 100 + 10 * np.sin(2 * np.pi * t / period)
    dates = tuple(dt.date(2016, 1, 1) + dt.timedelta(days=int(i)) for i in t)
    sec = s if secondary is None else secondary
    return build_dataset(AlignedTable(dates, s, sec, np.zeros(n, bool)), lookback=5)


class TestActivations:
    def test_centres(self):
        assert sigmoid(0.0) == 0.5
        assert tanh_act(0.0) == 0.0

    def test_saturation_without_overflow(self):
        with np.errstate(over="raise"):
            assert sigmoid(1000.0) == 1.0
            assert sigmoid(-1000.0) == 0.0

    @given(st.floats(-700, 700))
    def test_symmetry(self, x):
        assert sigmoid(-x) == pytest.approx(1 - sigmoid(x), abs=1e-15)
        assert tanh_act(-x) == -tanh_act(x)

    def test_monotone(self):
        x = np.linspace(-40, 40, 2001)
        assert np.all(np.diff(sigmoid(x)) >= 0)
        assert np.all(np.diff(tanh_act(x)) >= 0)


class TestCell:
    def test_zero_weights_unit_cell(self):
        state, cache = lstm_cell_forward(zero_params(2, 1), np.array([3.0, -1.0]),
                                         CellState(np.zeros(1), np.ones(1)))
        assert cache["f"][0] == cache["i"][0] == cache["o"][0] == 0.5
        assert cache["g"][0] == 0.0
        assert state.c[0] == 0.5
        assert state.h[0] == pytest.approx(0.5 * np.tanh(0.5))
        assert state.h[0] == pytest.approx(0.231059, abs=1e-6)

    def test_zero_fixed_point(self):
        state, _ = lstm_cell_forward(zero_params(2, 3), np.array([5.0, 7.0]), CellState.zeros(3))
        np.testing.assert_array_equal(state.c, 0)
        np.testing.assert_array_equal(state.h, 0)

    def test_pure_remembering(self):
        params = zero_params(2, 1)
        params["b_f"][:] = 50.0
        params["b_i"][:] = -50.0
        state, _ = lstm_cell_forward(params, np.array([1.0, 1.0]), CellState(np.zeros(1), np.array([2.0])))
        assert state.c[0] == pytest.approx(2.0, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            lstm_cell_forward(zero_params(2, 3), np.zeros(3), CellState.zeros(3))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.1, 20))
    def test_hidden_bound(self, seed, scale):
        rng = np.random.default_rng(seed)
        params = {k: v * scale for k, v in init_params(2, 4, rng).items()}
        state = CellState.zeros(4)
        for _ in range(6):
            state, cache = lstm_cell_forward(params, rng.normal(0, scale, 2), state)
            assert np.all(np.abs(state.h) < 1)
            for gate in ("f", "i", "o"):
                assert np.all((cache[gate] >= 0) & (cache[gate] <= 1))


class TestSequence:
    def test_single_step(self):
        rng = np.random.default_rng(0)
        params = init_params(2, 3, rng)
        x = rng.normal(size=2)
        pred, _ = forward_sequence(params, x[None, :])
        state, _ = lstm_cell_forward(params, x, CellState.zeros(3))
        assert pred == pytest.approx(state.h @ params["W_out"][0] + params["b_out"][0])

    def test_zero_params_predict_bias(self):
        params = zero_params(2, 4)
        params["b_out"][:] = 0.37
        preds, _ = forward_sequence(params, np.random.default_rng(1).normal(size=(5, 7, 2)))
        np.testing.assert_array_equal(preds, 0.37)

    def test_weight_free_params_ignore_input(self):
        rng = np.random.default_rng(2)
        params = zero_params(2, 3)
        for name in ("b_f", "b_i", "b_C", "b_o"):
            params[name] = rng.normal(size=3)
        params["W_out"] = rng.normal(size=(1, 3))
        row = rng.normal(size=2)
        # state evolution is input-independent, so only the number of steps matters
        a, _ = forward_sequence(params, np.tile(row, (4, 1)))
        b, _ = forward_sequence(params, rng.normal(size=(4, 2)))
        assert a == pytest.approx(b)
        one, _ = forward_sequence(params, row[None, :])
        two, _ = forward_sequence(params, np.tile(row, (2, 1)))
        assert one != two or params["b_f"].max() < -30

    def test_batch_matches_single(self):
        rng = np.random.default_rng(3)
        params = init_params(2, 4, rng)
        X = rng.normal(size=(6, 5, 2))
        batch, _ = forward_sequence(params, X)
        single = [forward_sequence(params, x)[0] for x in X]
        np.testing.assert_allclose(batch, single, rtol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            forward_sequence(zero_params(2, 3), np.zeros((4, 3)))


class TestLoss:
    def test_values(self):
        assert mae_loss([1, 2], [1, 2]) == 0.0
        assert mae_loss([1, 2], [2, 4]) == 1.5

    def test_permutation(self):
        p, t = np.array([1.0, 5.0, -2.0]), np.array([0.5, 4.0, 3.0])
        perm = [2, 0, 1]
        assert mae_loss(p[perm], t[perm]) == mae_loss(p, t)

    @pytest.mark.parametrize("p,t", [([], []), ([1.0], [1.0, 2.0])])
    def test_bad_lengths(self, p, t):
        with pytest.raises(ValueError):
            mae_loss(p, t)

    def test_subgradient_at_tie(self):
        np.testing.assert_array_equal(mae_grad([1.0, 2.0, 3.0], [1.0, 1.0, 4.0]), [0, 1 / 3, -1 / 3])


class TestBackward:
    def test_zero_upstream(self):
        params, X, _ = random_instance(np.random.default_rng(0), 3, 4)
        _, caches = forward_sequence(params, X)
        grads = backward_through_time(params, caches, np.zeros(3))
        assert all(not g.any() for g in grads.values())

    def test_linearity(self):
        params, X, y = random_instance(np.random.default_rng(1), 3, 4)
        pred, caches = forward_sequence(params, X)
        g1 = backward_through_time(params, caches, mae_grad(pred, y))
        g2 = backward_through_time(params, caches, 2 * mae_grad(pred, y))
        for name in PARAM_NAMES:
            np.testing.assert_allclose(g2[name], 2 * g1[name], rtol=1e-14)

    @pytest.mark.parametrize("seed", range(5))
    def test_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        params, X, y = random_instance(rng, 3, 4)
        pred, caches = forward_sequence(params, X)
        analytic = backward_through_time(params, caches, mae_grad(pred, y))
        numeric = numeric_grad(params, lambda: mae_loss(forward_sequence(params, X)[0], y))
        for name in PARAM_NAMES:
            np.testing.assert_allclose(analytic[name], numeric[name], rtol=1e-4, atol=1e-7)

    def test_unbatched_window(self):
        rng = np.random.default_rng(7)
        params, X, _ = random_instance(rng, 2, 3, batch=1)
        pred, caches = forward_sequence(params, X[0])
        grads = backward_through_time(params, caches, 1.0)
        numeric = numeric_grad(params, lambda: forward_sequence(params, X[0])[0])
        for name in PARAM_NAMES:
            np.testing.assert_allclose(grads[name], numeric[name], rtol=1e-4, atol=1e-7)

    def test_cache_mismatch(self):
        rng = np.random.default_rng(0)
        params, X, _ = random_instance(rng, 3, 4)
        _, caches = forward_sequence(params, X)
        with pytest.raises(ValueError):
            backward_through_time(init_params(2, 2, rng), caches, np.zeros(3))

    def test_shapes_mirror_params(self):
        params, X, y = random_instance(np.random.default_rng(2), 4, 2)
        pred, caches = forward_sequence(params, X)
        grads = backward_through_time(params, caches, mae_grad(pred, y))
        assert {k: g.shape for k, g in grads.items()} == {k: p.shape for k, p in params.items()}


class TestAdam:
    def test_first_step(self):
        params = {"w": np.array([0.0])}
        state = AdamState.for_params(params, lr=0.001)
        adam_step(state, params, {"w": np.array([5.0])})
        assert params["w"][0] == pytest.approx(-0.001, rel=1e-6)
        assert state.t == 1

    def test_zero_gradient_fixed_point(self):
        params = {"w": np.array([1.5, -2.0])}
        state = AdamState.for_params(params)
        for _ in range(50):
            adam_step(state, params, {"w": np.zeros(2)})
        np.testing.assert_array_equal(params["w"], [1.5, -2.0])

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30))
    def test_second_moment_non_negative(self, gs):
        params = {"w": np.zeros(1)}
        state = AdamState.for_params(params)
        for g in gs:
            adam_step(state, params, {"w": np.array([g])})
            assert state.v["w"][0] >= 0

    def test_shape_mismatch(self):
        params = {"w": np.zeros(2)}
        with pytest.raises(ValueError):
            adam_step(AdamState.for_params(params), params, {"w": np.zeros(3)})


class TestTrain:
    def test_config_invariants(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(hidden=0)

    def test_default_schedule(self):
        cfg = TrainConfig()
        assert (cfg.epochs, cfg.batch_size) == (200, 200)

    def test_batches_per_epoch(self):
        ds = sine_dataset()
        X, y = make_windows(ds)
        assert len(X) == 407
        model = train(TrainConfig(epochs=2, hidden=4), X, y)
        assert model.adam.t == 2 * 3  # batches of 200, 200, 7
        assert len(model.history) == 2

    def test_partial_batch_used(self):
        rng = np.random.default_rng(0)
        X, y = rng.uniform(size=(5, 5, 2)), rng.uniform(size=5)
        a = train(TrainConfig(epochs=1, batch_size=4, hidden=3), X, y)
        b = train(TrainConfig(epochs=1, batch_size=4, hidden=3), X[:4], y[:4])
        assert a.adam.t == 2 and b.adam.t == 1
        assert not np.array_equal(a.params["W_f"], b.params["W_f"])

    def test_no_samples(self):
        with pytest.raises(ValueError):
            train(TrainConfig(), np.empty((0, 5, 2)), np.empty(0))

    def test_deterministic(self):
        X, y = make_windows(sine_dataset())
        cfg = TrainConfig(epochs=5, hidden=6, seed=11)
        a, b = train(cfg, X, y), train(cfg, X, y)
        for name in PARAM_NAMES:
            assert np.array_equal(a.params[name], b.params[name])
        c = train(TrainConfig(epochs=5, hidden=6, seed=12), X, y)
        assert not np.array_equal(a.params["W_o"], c.params["W_o"])

    def test_shape_conservation(self):
        X, y = make_windows(sine_dataset())
        model = train(TrainConfig(epochs=2, hidden=5), X, y)
        for name in PARAM_NAMES:
            assert model.adam.m[name].shape == model.params[name].shape == model.adam.v[name].shape
        check_params(model.params)

    def test_shuffle_and_clip_options(self):
        X, y = make_windows(sine_dataset())
        model = train(TrainConfig(epochs=3, hidden=4, shuffle=True, clip_norm=0.5), X, y)
        assert np.isfinite(model.history).all()

    @pytest.mark.slow
    def test_mae_settles_on_sine(self):
        # step size of the smooth-descent regime; larger steps learn faster but jitter
        t = np.arange(501)
        z = np.sin(2 * np.pi * t / 50)
        z = (z - z[:412].min()) / np.ptp(z[:412])
        X = np.stack([z[i:i + 5] for i in range(407)])[..., None]
        h = np.array(train(TrainConfig(learning_rate=0.001), X, z[5:412]).history)
        mid = len(h) // 2
        assert h[mid:].max() <= 1.05 * h[mid]
        assert h[-1] <= h[mid]


@pytest.fixture(scope="module")
def trained():
    ds = sine_dataset(secondary=100 + 10 * np.cos(2 * np.pi * np.arange(501) / 50))
    return ds, fit(TrainConfig(epochs=20, hidden=8), ds)


class TestPredict:
    def test_one_forecast_per_test_day(self, trained):
        ds, model = trained
        f = predict(model, ds)
        assert len(f) == ds.n_test == 89
        assert f.dates == ds.test_dates

    def test_modes_agree_on_first_day(self, trained):
        ds, model = trained
        a, b = predict(model, ds), predict(model, ds, mode="recursive")
        assert a.closes[0] == b.closes[0]
        assert not np.array_equal(a.closes, b.closes)

    def test_inverse_scaling(self, trained):
        ds, model = trained
        k = ds.split_index
        scaled = model.predict_scaled(ds.features[k - 5:k])[0]
        lo, hi = ds.scalers[0].min, ds.scalers[0].max
        assert predict(model, ds).closes[0] == pytest.approx(lo + scaled * (hi - lo), rel=1e-14)

    def test_untrained(self, trained):
        ds, model = trained
        blank = LstmModel(model.config, model.params, AdamState.for_params(model.params))
        with pytest.raises(ValueError):
            predict(blank, ds)

    def test_bad_mode(self, trained):
        ds, model = trained
        with pytest.raises(ValueError):
            predict(model, ds, mode="sideways")

    def test_checkpoint_round_trip(self, trained, tmp_path):
        ds, model = trained
        save_checkpoint(model, tmp_path / "m.json")
        loaded = load_checkpoint(tmp_path / "m.json")
        for name in PARAM_NAMES:
            assert np.array_equal(loaded.params[name], model.params[name])
        assert loaded.config == model.config
        assert loaded.scalers == model.scalers
        for mode in ("one-step", "recursive"):
            assert np.array_equal(predict(loaded, ds, mode).closes, predict(model, ds, mode).closes)
