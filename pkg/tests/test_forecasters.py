"""The four one-step forecasters: correctness, purity, no lookahead."""

import datetime

import numpy as np
import pytest

from curvecast.data_io import Scale, from_log_prices, simulate_panel, to_log_prices
from curvecast.errors import SingularDesignError
from curvecast.forecasters import (
    fts_forecast,
    fundamental_forecast,
    ols_fit,
    pc_forecast,
    rw_forecast,
)

from conftest import make_factors, make_panel, two_component_spec


DAY2 = datetime.date(2020, 1, 2)


def returns_panel(values):
    """Return panel dated one day after the default level-panel start, so it
    aligns with levels/prices panels that begin on 2020-01-01."""
    return make_panel(values, scale=Scale.LOG_RETURN, start=DAY2)


def lagged_factor_setup(n, seed=0, slope=None, noise=0.0):
    """Returns r_t = intercept + slope @ change_{t-1} (+ noise) and the
    matching level panel, on a shared date axis of n+1 price days."""
    rng = np.random.default_rng(seed)
    changes = 0.01 * rng.standard_normal((n, 4))
    levels = np.exp(np.vstack([np.zeros(4), np.cumsum(changes, axis=0)]))
    if slope is None:
        slope = np.zeros(4)
    returns = np.empty((n, 11))
    intercept = 0.002
    for t in range(n):
        prev = changes[t - 1] if t > 0 else np.zeros(4)
        returns[t, :] = intercept + prev @ slope + noise * rng.standard_normal(11)
    return returns, levels, changes, intercept, np.asarray(slope)


class TestOls:
    def test_exact_fit(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((20, 3))
        beta = np.array([0.5, -1.0, 2.0])
        y = 0.25 + x @ beta
        fit = ols_fit(x, y, ("a", "b", "c"))
        np.testing.assert_allclose(fit.coefficients, [0.25, *beta], atol=1e-10)
        assert fit.residual_variance <= 1e-20

    def test_singular_rejected(self):
        rng = np.random.default_rng(2)
        col = rng.standard_normal(15)
        x = np.column_stack([col, col])
        with pytest.raises(SingularDesignError):
            ols_fit(x, rng.standard_normal(15), ("a", "b"))


class TestFts:
    def test_tracks_noiseless_generator(self):
        spec = two_component_spec(noise_sd=0.0, eps1=0.0, eps2=0.0)
        # deterministic damped-trend scores: the model class matches exactly
        long_panel = simulate_panel(spec, n_days=61, seed=0)
        window = make_panel(long_panel.values[:60, :], scale=Scale.LOG_PRICE)
        truth_next = long_panel.values[60, :]
        forecast_return = fts_forecast(window, 0.99)
        predicted_curve = window.values[-1, :] + forecast_return
        assert np.abs(predicted_curve - truth_next).max() <= 1e-3

    def test_constant_panel_zero_return(self):
        window = make_panel(np.tile(np.linspace(4, 4.5, 11), (40, 1)), scale=Scale.LOG_PRICE)
        np.testing.assert_array_equal(fts_forecast(window, 0.99), np.zeros(11))

    def test_requires_log_price_scale(self):
        window = make_panel(np.full((40, 11), 80.0))
        with pytest.raises(ValueError):
            fts_forecast(window, 0.99)

    def test_minimum_window(self):
        window = make_panel(np.random.default_rng(0).standard_normal((29, 11)),
                            scale=Scale.LOG_PRICE)
        with pytest.raises(ValueError):
            fts_forecast(window, 0.99)

    def test_pure_function(self):
        panel = simulate_panel(two_component_spec(noise_sd=0.001), n_days=50, seed=3)
        a = fts_forecast(panel, 0.99)
        b = fts_forecast(panel, 0.99)
        assert np.array_equal(a, b)

    def test_level_shift_invariance(self):
        panel = simulate_panel(two_component_spec(noise_sd=0.001), n_days=50, seed=4)
        shifted = make_panel(panel.values + 0.7, scale=Scale.LOG_PRICE)
        a = fts_forecast(panel, 0.99)
        b = fts_forecast(shifted, 0.99)
        np.testing.assert_allclose(a, b, atol=1e-10)


class TestFundamental:
    def test_constant_returns_recovered(self):
        returns, levels, _, _, _ = lagged_factor_setup(20, seed=5)
        forecast = fundamental_forecast(returns_panel(returns), make_factors(levels))
        np.testing.assert_allclose(forecast, 0.002, atol=1e-12)

    def test_planted_linear_model(self):
        slope = np.array([0.4, -0.2, 0.1, 0.3])
        returns, levels, changes, intercept, _ = lagged_factor_setup(30, seed=6, slope=slope)
        forecast = fundamental_forecast(returns_panel(returns), make_factors(levels))
        expected = intercept + changes[-1] @ slope
        assert np.abs(forecast - expected).max() <= 1e-10

    def test_duplicated_factor_column_singular(self):
        returns, levels, _, _, _ = lagged_factor_setup(15, seed=7, noise=1e-3)
        levels[:, 1] = levels[:, 0]
        with pytest.raises(SingularDesignError):
            fundamental_forecast(returns_panel(returns), make_factors(levels))

    def test_regressor_shift_invariance(self):
        # adding a constant to every log-change column = growing the levels
        # geometrically; the intercept must absorb it
        slope = np.array([0.4, -0.2, 0.1, 0.3])
        returns, levels, changes, _, _ = lagged_factor_setup(25, seed=8, slope=slope, noise=1e-3)
        shifted_changes = changes + 0.05
        shifted_levels = np.exp(
            np.vstack([np.zeros(4), np.cumsum(shifted_changes, axis=0)])
        )
        base = fundamental_forecast(returns_panel(returns), make_factors(levels))
        shifted = fundamental_forecast(returns_panel(returns), make_factors(shifted_levels))
        np.testing.assert_allclose(base, shifted, atol=1e-10)

    def test_window_too_short(self):
        returns, levels, _, _, _ = lagged_factor_setup(6, seed=9)
        with pytest.raises(ValueError):
            fundamental_forecast(returns_panel(returns), make_factors(levels))


class TestPc:
    def test_planted_linear_in_lagged_score(self):
        rng = np.random.default_rng(10)
        n = 40
        prices = 80.0 + np.cumsum(rng.standard_normal((n + 1, 11)), axis=0) * 0.5
        price_panel = make_panel(np.abs(prices) + 50.0)
        centered = price_panel.values - price_panel.values.mean(axis=0)
        cov = centered.T @ centered / (n + 1)
        vals, vecs = np.linalg.eigh(cov)
        lead = vecs[:, -1]
        if lead[np.argmax(np.abs(lead))] < 0:
            lead = -lead
        scores = centered @ lead
        returns = np.empty((n, 11))
        for t in range(n):
            returns[t, :] = 0.001 + 0.003 * scores[t]  # lagged score drives return
        forecast = pc_forecast(returns_panel(returns), price_panel)
        expected = 0.001 + 0.003 * scores[-1]
        assert np.abs(forecast - expected).max() <= 1e-8

    def test_constant_returns(self):
        rng = np.random.default_rng(11)
        prices = 80.0 + rng.standard_normal((21, 11))
        returns = np.full((20, 11), 0.004)
        forecast = pc_forecast(returns_panel(returns), make_panel(prices))
        np.testing.assert_allclose(forecast, 0.004, atol=1e-12)

    def test_rank_two_price_window_drops_third_component(self, caplog):
        rng = np.random.default_rng(12)
        a = rng.standard_normal(21)
        b = rng.standard_normal(21)
        u = np.abs(rng.standard_normal(11)) + 0.5
        v = rng.standard_normal(11)
        prices = 100.0 + np.outer(a, u) + np.outer(b, v)
        returns = 0.002 + 0.001 * rng.standard_normal((20, 11))
        import logging

        with caplog.at_level(logging.WARNING, logger="curvecast.forecasters"):
            forecast = pc_forecast(returns_panel(returns), make_panel(prices))
        assert forecast.shape == (11,)
        assert any("principal components" in r.message for r in caplog.records)

    def test_price_level_shift_invariance(self):
        # adding a constant to every price cell leaves the centered window,
        # hence the component scores and the forecast, unchanged
        rng = np.random.default_rng(16)
        prices = 80.0 + np.cumsum(0.3 * rng.standard_normal((26, 11)), axis=0)
        prices = np.abs(prices) + 40.0
        returns = 0.01 * rng.standard_normal((25, 11))
        base = pc_forecast(returns_panel(returns), make_panel(prices))
        shifted = pc_forecast(returns_panel(returns), make_panel(prices + 25.0))
        np.testing.assert_allclose(base, shifted, atol=1e-10)

    def test_date_alignment_enforced(self):
        rng = np.random.default_rng(13)
        prices = make_panel(80.0 + rng.standard_normal((21, 11)))
        returns = make_panel(0.01 * rng.standard_normal((20, 11)), scale=Scale.LOG_RETURN)
        with pytest.raises(ValueError):
            pc_forecast(returns, prices.head(20))


class TestRw:
    def test_repeats_last_return(self):
        rng = np.random.default_rng(14)
        values = 0.01 * rng.standard_normal((5, 11))
        values[-1, :] = 0.004
        np.testing.assert_array_equal(rw_forecast(returns_panel(values)), 0.004)

    def test_single_row_window(self):
        values = np.full((1, 11), -0.002)
        np.testing.assert_array_equal(rw_forecast(returns_panel(values)), -0.002)

    def test_only_final_row_matters(self):
        rng = np.random.default_rng(15)
        a = 0.01 * rng.standard_normal((8, 11))
        b = 0.01 * rng.standard_normal((8, 11))
        b[-1, :] = a[-1, :]
        fa = rw_forecast(returns_panel(a))
        fb = rw_forecast(returns_panel(b))
        np.testing.assert_array_equal(fa, fb)


class TestNoLookahead:
    def test_truncation_equivalence(self):
        """Appending future rows to the window inputs must not change what a
        model forecasts from the truncated window."""
        spec = two_component_spec(noise_sd=0.001)
        panel = simulate_panel(spec, n_days=80, seed=20)
        prices = from_log_prices(panel)
        log_prices = to_log_prices(prices)
        window = make_panel(log_prices.values[:60, :], scale=Scale.LOG_PRICE)
        full_then_cut = make_panel(log_prices.values[:80, :], scale=Scale.LOG_PRICE).head(60)
        np.testing.assert_array_equal(
            fts_forecast(window, 0.99), fts_forecast(full_then_cut, 0.99)
        )
