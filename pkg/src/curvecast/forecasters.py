"""One-step-ahead curve forecasters: functional, fundamental, discrete-PC,
and random walk.

All four emit next-day per-tenor forecasts on the LOG_RETURN scale so the
loss suite compares like with like. Each function sees only its training
window; nothing dated at or after the target day may enter (the backtester
enforces this by construction, the tests by truncation equivalence).
"""

from __future__ import annotations

import datetime
import logging
from dataclasses import dataclass

import numpy as np

from .data_io import FactorPanel, FuturesPanel, Scale, _freeze
from .errors import SingularDesignError
from .ets import ets_fit, ets_forecast
from .fpca import fit_fpca

logger = logging.getLogger(__name__)

# Relative condition threshold below which a design matrix is treated as
# rank deficient, and below which a price-panel eigenvalue is treated as a
# degenerate principal component.
RCOND = 1e-10

MIN_FTS_WINDOW = 30
MIN_FUNDAMENTAL_WINDOW = 7
MIN_PC_WINDOW = 6


@dataclass(frozen=True)
class ForecastRecord:
    """One model's forecast for one target day, with the realized outcome."""

    model: str
    target_date: datetime.date
    tenors: tuple[str, ...]
    forecast: np.ndarray
    realized: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "forecast", _freeze(self.forecast))
        object.__setattr__(self, "realized", _freeze(self.realized))
        m = len(self.tenors)
        if self.forecast.shape != (m,) or self.realized.shape != (m,):
            raise ValueError("forecast/realized must hold one value per tenor")


@dataclass(frozen=True)
class OlsFit:
    """Least-squares fit: intercept first, then one slope per regressor."""

    coefficients: np.ndarray
    residual_variance: float
    regressors: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficients", _freeze(self.coefficients))
        if self.coefficients.shape != (len(self.regressors) + 1,):
            raise ValueError("need exactly one coefficient per regressor plus intercept")

    def predict(self, x: np.ndarray) -> float:
        return float(self.coefficients[0] + self.coefficients[1:] @ x)


def ols_fit(design: np.ndarray, target: np.ndarray, names: tuple[str, ...]) -> OlsFit:
    """OLS via SVD least squares; raises SingularDesignError on rank deficiency."""
    x = np.column_stack([np.ones(design.shape[0]), design])
    coef, _, rank, _ = np.linalg.lstsq(x, target, rcond=RCOND)
    if rank < x.shape[1]:
        raise SingularDesignError(
            f"design matrix rank {rank} < {x.shape[1]} (collinear regressors)"
        )
    resid = target - x @ coef
    dof = max(x.shape[0] - x.shape[1], 1)
    return OlsFit(coef, float(resid @ resid / dof), names)


def fts_forecast(log_price_window: FuturesPanel, var_target: float = 0.99) -> np.ndarray:
    """Functional forecast: decompose the curve window, project each score
    series one step ahead with a damped trend, rebuild the curve, and
    difference against the last observed curve.

    Returns per-tenor next-day log-return forecasts.
    """
    if log_price_window.scale is not Scale.LOG_PRICE:
        raise ValueError(f"expected LOG_PRICE window, got {log_price_window.scale.name}")
    if log_price_window.n_days < MIN_FTS_WINDOW:
        raise ValueError(f"window shorter than {MIN_FTS_WINDOW} days")
    if np.ptp(log_price_window.values, axis=0).max() == 0.0:
        # every day shows the same curve: the only defensible forecast is
        # that curve again, i.e. a zero return everywhere
        return np.zeros(len(log_price_window.tenors))
    model = fit_fpca(log_price_window, var_target)
    next_scores = np.empty(model.n_components)
    for k in range(model.n_components):
        fit = ets_fit(model.scores[:, k])
        next_scores[k] = ets_forecast(fit, 1)[0]
    next_curve = model.mean_curve + model.eigenfunctions @ next_scores
    return next_curve - log_price_window.values[-1, :]


def _lagged_regression_forecast(
    returns: np.ndarray, regressors: np.ndarray, names: tuple[str, ...]
) -> np.ndarray:
    """Per-tenor OLS of return_t on regressors_{t-1}; forecast from the last row.

    ``returns`` rows are dated like ``regressors`` rows; the first return is
    dropped to form the lag.
    """
    design = regressors[:-1, :]
    latest = regressors[-1, :]
    out = np.empty(returns.shape[1])
    for j in range(returns.shape[1]):
        fit = ols_fit(design, returns[1:, j], names)
        out[j] = fit.predict(latest)
    return out


def fundamental_forecast(return_window: FuturesPanel, factor_window: FactorPanel) -> np.ndarray:
    """Benchmark regression on lagged exogenous-factor log-changes.

    ``factor_window`` holds levels on the price dates, so its log-changes
    align one-to-one with ``return_window`` dates.
    """
    if return_window.scale is not Scale.LOG_RETURN:
        raise ValueError("return window must be on LOG_RETURN scale")
    if return_window.n_days < MIN_FUNDAMENTAL_WINDOW:
        raise ValueError(f"window shorter than {MIN_FUNDAMENTAL_WINDOW} days")
    change_dates, changes = factor_window.log_changes()
    if change_dates != return_window.dates:
        raise ValueError("factor log-change dates must match return dates exactly")
    return _lagged_regression_forecast(return_window.values, changes, factor_window.columns)


def _leading_components(prices: np.ndarray, n_components: int) -> np.ndarray:
    """Columns of the leading covariance-PCA directions of a price window,
    largest-magnitude entry positive; degenerate directions dropped."""
    centered = prices - prices.mean(axis=0)
    cov = centered.T @ centered / prices.shape[0]
    vals, vecs = np.linalg.eigh((cov + cov.T) / 2.0)
    order = np.argsort(vals, kind="stable")[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    keep = vals > max(vals[0], 0.0) * RCOND
    available = int(min(n_components, keep.sum()))
    if available < n_components:
        logger.warning(
            "price window supports %d of %d principal components; "
            "regression proceeds on the available ones",
            available,
            n_components,
        )
    vecs = vecs[:, :available]
    for k in range(available):
        col = vecs[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            vecs[:, k] = -col
    return vecs


def pc_forecast(return_window: FuturesPanel, price_window: FuturesPanel) -> np.ndarray:
    """Benchmark regression on three lagged discrete principal-component
    scores extracted from the price window (recomputed per window)."""
    if return_window.scale is not Scale.LOG_RETURN:
        raise ValueError("return window must be on LOG_RETURN scale")
    if price_window.scale is not Scale.PRICE:
        raise ValueError("price window must be on PRICE scale")
    if return_window.n_days < MIN_PC_WINDOW:
        raise ValueError(f"window shorter than {MIN_PC_WINDOW} days")
    if price_window.dates[1:] != return_window.dates:
        raise ValueError("price window must cover return dates plus the day before")
    directions = _leading_components(price_window.values, 3)
    centered = price_window.values - price_window.values.mean(axis=0)
    scores = centered @ directions
    names = tuple(f"pc{k + 1}" for k in range(directions.shape[1]))
    # scores[0] belongs to the day before the first return: scores[:-1] are
    # the lagged regressors for returns[:], scores[-1] feeds the forecast.
    design = scores[:-1, :]
    latest = scores[-1, :]
    out = np.empty(return_window.values.shape[1])
    for j in range(out.shape[0]):
        fit = ols_fit(design, return_window.values[:, j], names)
        out[j] = fit.predict(latest)
    return out


def rw_forecast(return_window: FuturesPanel) -> np.ndarray:
    """Driftless benchmark on the evaluated series: repeat the last return."""
    if return_window.n_days < 1:
        raise ValueError("window must hold at least one observation")
    return return_window.values[-1, :].copy()
