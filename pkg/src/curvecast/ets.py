"""Damped-trend exponential smoothing for univariate score series.

State recursion, observation y_t with level l, trend b, damping xi,
smoothing weights delta (level) and gamma (trend):

    prediction_t = l_{t-1} + xi * b_{t-1}
    residual_t   = y_t - prediction_t
    l_t          = prediction_t + delta * residual_t
    b_t          = xi * b_{t-1} + gamma * residual_t

Forecasts damp the trend geometrically, converging to a flat line at
``l_n + xi / (1 - xi) * b_n``.

Fitting minimizes one-step squared error over a deterministic coarse grid
followed by a Nelder-Mead polish that also frees the initial states, so
repeated fits of the same series give identical parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.optimize import minimize

from .data_io import _freeze
from .errors import InadmissibleParamsError

# Fitting box: slightly inside the admissible region so optimizer output
# never sits on a non-forecastable boundary.
XI_MAX = 0.999
DELTA_MIN = 1e-4


@dataclass(frozen=True)
class DampedTrendParams:
    """Smoothing parameters and initial states for one series."""

    damping: float
    level_smoothing: float
    trend_smoothing: float
    initial_level: float
    initial_trend: float

    def validate(self) -> None:
        ok = (
            0.0 <= self.damping < 1.0
            and 0.0 < self.level_smoothing <= 1.0
            and 0.0 <= self.trend_smoothing <= self.level_smoothing
            and math.isfinite(self.initial_level)
            and math.isfinite(self.initial_trend)
        )
        if not ok:
            raise InadmissibleParamsError(
                "require 0 <= damping < 1, 0 < level_smoothing <= 1, "
                "0 <= trend_smoothing <= level_smoothing, finite initial states; "
                f"got {self}"
            )


@dataclass(frozen=True)
class EtsFit:
    """Filter output: per-step states and one-step residuals."""

    params: DampedTrendParams
    levels: np.ndarray
    trends: np.ndarray
    residuals: np.ndarray
    sse: float

    def __post_init__(self) -> None:
        for name in ("levels", "trends", "residuals"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))
        n = self.residuals.shape[0]
        if self.levels.shape != (n,) or self.trends.shape != (n,):
            raise ValueError("state and residual lengths differ")

    @property
    def predictions(self) -> np.ndarray:
        """One-step-ahead predictions for the filtered observations."""
        # prediction_t = l_t - delta * residual_t, from the level update
        return self.levels - self.params.level_smoothing * self.residuals


@njit(cache=True)
def _sse_kernel(y, xi, delta, gamma, l0, b0):  # pragma: no cover - compiled
    level = l0
    trend = b0
    sse = 0.0
    for t in range(y.shape[0]):
        pred = level + xi * trend
        eps = y[t] - pred
        sse += eps * eps
        level = pred + delta * eps
        trend = xi * trend + gamma * eps
    return sse


@njit(cache=True)
def _filter_kernel(y, xi, delta, gamma, l0, b0, levels, trends, residuals):  # pragma: no cover
    level = l0
    trend = b0
    for t in range(y.shape[0]):
        pred = level + xi * trend
        eps = y[t] - pred
        level = pred + delta * eps
        trend = xi * trend + gamma * eps
        levels[t] = level
        trends[t] = trend
        residuals[t] = eps


def ets_filter(series, params: DampedTrendParams) -> EtsFit:
    """Run the damped-trend recursion over a series, storing states per step."""
    y = np.ascontiguousarray(series, dtype=float)
    if y.ndim != 1 or y.shape[0] < 2:
        raise ValueError("series must be 1-D with length >= 2")
    params.validate()
    n = y.shape[0]
    levels = np.empty(n)
    trends = np.empty(n)
    residuals = np.empty(n)
    _filter_kernel(
        y,
        params.damping,
        params.level_smoothing,
        params.trend_smoothing,
        params.initial_level,
        params.initial_trend,
        levels,
        trends,
        residuals,
    )
    return EtsFit(params, levels, trends, residuals, float(residuals @ residuals))


def ets_forecast(fit: EtsFit, horizon: int) -> np.ndarray:
    """Forecast path l_n + (xi + xi^2 + ... + xi^j) * b_n for j = 1..horizon."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    xi = fit.params.damping
    level = fit.levels[-1]
    trend = fit.trends[-1]
    damp = np.cumsum(xi ** np.arange(1, horizon + 1))
    return level + damp * trend


def _initial_states(y: np.ndarray) -> tuple[float, float]:
    diffs = np.diff(y[: min(5, y.shape[0])])
    return float(y[0]), float(diffs.mean())


def _clip_box(x: np.ndarray) -> np.ndarray:
    xi = min(max(x[0], 0.0), XI_MAX)
    delta = min(max(x[1], DELTA_MIN), 1.0)
    gamma = min(max(x[2], 0.0), delta)
    return np.array([xi, delta, gamma, x[3], x[4]])


def ets_fit(series) -> EtsFit:
    """Fit by one-step SSE: deterministic 8-point grids on each smoothing
    parameter, then Nelder-Mead over parameters and initial states."""
    y = np.ascontiguousarray(series, dtype=float)
    if y.ndim != 1 or y.shape[0] < 4:
        raise ValueError("series must be 1-D with length >= 4")
    if np.ptp(y) == 0.0:
        flat = DampedTrendParams(0.0, DELTA_MIN, 0.0, float(y[0]), 0.0)
        return ets_filter(y, flat)

    l0, b0 = _initial_states(y)
    best = (math.inf, None)
    for xi in np.linspace(0.0, XI_MAX, 8):
        for delta in np.linspace(DELTA_MIN, 1.0, 8):
            for gamma in np.linspace(0.0, 1.0, 8):
                if gamma > delta:
                    continue
                sse = _sse_kernel(y, xi, delta, gamma, l0, b0)
                if sse < best[0]:
                    best = (sse, (xi, delta, gamma))
    xi0, delta0, gamma0 = best[1]

    def objective(x: np.ndarray) -> float:
        c = _clip_box(x)
        return _sse_kernel(y, c[0], c[1], c[2], c[3], c[4])

    result = minimize(
        objective,
        x0=np.array([xi0, delta0, gamma0, l0, b0]),
        method="Nelder-Mead",
        options={"maxfev": 2000, "xatol": 1e-9, "fatol": 1e-12},
    )
    final = _clip_box(result.x)
    params = DampedTrendParams(
        damping=float(final[0]),
        level_smoothing=float(final[1]),
        trend_smoothing=float(final[2]),
        initial_level=float(final[3]),
        initial_trend=float(final[4]),
    )
    return ets_filter(y, params)
