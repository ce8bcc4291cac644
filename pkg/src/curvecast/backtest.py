"""Expanding-window out-of-sample experiment and one-shot in-sample fit.

For every out-of-sample day each requested model is re-estimated on all
data strictly before that day and asked for a one-step forecast, so the
training window grows by exactly one observation per step. A model failure
aborts the run with the offending window identified; partial runs would
poison the downstream set comparison.
"""

from __future__ import annotations

import datetime
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .data_io import FactorPanel, FuturesPanel, align_panels, to_log_prices, to_log_returns
from .errors import CurvecastError
from .ets import ets_fit
from .evaluation import LossMatrix, LossReport, MeasureTable, build_loss_matrix, evaluate_records
from .forecasters import (
    ForecastRecord,
    _leading_components,
    fts_forecast,
    fundamental_forecast,
    ols_fit,
    pc_forecast,
    rw_forecast,
)
from .fpca import FpcaModel, fit_fpca
from .mcs import MAX, RANGE, BootstrapPlan, McsResult, dm_test, mcs_run, modified_dm_test

MODEL_NAMES = ("pc", "fts", "fundamental", "rw")
MIN_TRAIN = 30

# Measures with a directional/asymmetric reading that the driftless
# benchmark cannot meaningfully produce.
DIRECTIONAL_MEASURES = ("mme_under", "mme_over", "mcpdc")
OVERALL = "Overall"


class BacktestFailure(CurvecastError):
    """A model failed inside a specific training window."""


@dataclass(frozen=True)
class BacktestConfig:
    """Everything needed to reproduce a run, except the input files."""

    oos_len: int = 500
    var_target: float = 0.99
    models: tuple[str, ...] = MODEL_NAMES
    alphas: tuple[float, ...] = (0.25, 0.10)
    statistics: tuple[str, ...] = (RANGE, MAX)
    bootstrap_reps: int = 5000
    block_length: int | None = None
    seed: int = 0
    futures_path: str | None = None
    factors_path: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "alphas", tuple(self.alphas))
        object.__setattr__(self, "statistics", tuple(self.statistics))
        if self.oos_len < 0:
            raise ValueError("oos_len must be >= 0")
        unknown = set(self.models) - set(MODEL_NAMES)
        if unknown:
            raise ValueError(f"unknown models {sorted(unknown)}; choose from {MODEL_NAMES}")
        if len(set(self.models)) != len(self.models):
            raise ValueError("duplicate model names")
        if not all(0.0 < a < 1.0 for a in self.alphas):
            raise ValueError("alpha levels must lie in (0, 1)")
        if not set(self.statistics) <= {RANGE, MAX}:
            raise ValueError(f"statistics must be drawn from ('{RANGE}', '{MAX}')")
        if not 0.0 < self.var_target <= 1.0:
            raise ValueError("var_target must lie in (0, 1]")


@dataclass(frozen=True)
class DmComparison:
    """Pairwise equal-accuracy test row (plain and small-sample adjusted)."""

    model_a: str
    model_b: str
    statistic: float
    pvalue: float
    adjusted_statistic: float
    adjusted_pvalue: float


@dataclass(frozen=True)
class BacktestRun:
    """Complete out-of-sample run: forecasts, losses, set tests, decomposition.

    With an empty model set only the config and window bookkeeping are
    populated; report emission then writes a manifest and nothing else.
    """

    config: BacktestConfig
    tenors: tuple[str, ...]
    target_dates: tuple[datetime.date, ...]
    records: tuple[ForecastRecord, ...]
    loss_report: LossReport | None
    loss_matrix: LossMatrix | None
    mcs_results: Mapping[tuple[str, float, str], McsResult]
    dm_results: tuple[DmComparison, ...]
    decomposition: FpcaModel | None
    decomposition_dates: tuple[datetime.date, ...]
    insample_returns: np.ndarray
    elapsed_seconds: float = field(compare=False)


def _prepare(
    config: BacktestConfig, futures: FuturesPanel, factors: FactorPanel | None
) -> tuple[FuturesPanel, FactorPanel | None]:
    if "fundamental" in config.models:
        if factors is None:
            raise ValueError("the fundamental model requires a factor panel")
        return align_panels(futures, factors)
    if factors is not None:
        return align_panels(futures, factors)
    return futures, None


def _forecast_one(
    model: str,
    t: int,
    prices: FuturesPanel,
    log_prices: FuturesPanel,
    returns: FuturesPanel,
    factors: FactorPanel | None,
    var_target: float,
) -> np.ndarray:
    """One-step forecast for return index ``t`` from data strictly before it."""
    if model == "fts":
        return fts_forecast(log_prices.head(t + 1), var_target)
    if model == "fundamental":
        assert factors is not None
        return fundamental_forecast(returns.head(t), factors.head(t + 1))
    if model == "pc":
        return pc_forecast(returns.head(t), prices.head(t + 1))
    if model == "rw":
        return rw_forecast(returns.head(t))
    raise ValueError(f"unknown model {model!r}")


def _merged_report(records, models, insample_returns) -> LossReport:
    """Out-of-sample report: scale/level measures for every model,
    directional and asymmetric measures only where meaningful."""
    report = evaluate_records(records, ("mae", "me", "mase"), insample_returns)
    tables = {k: dict(v) for k, v in report.tables.items()}
    non_rw = [r for r in records if r.model != "rw"]
    if non_rw:
        extra = evaluate_records(non_rw, DIRECTIONAL_MEASURES)
        tables.update({k: dict(v) for k, v in extra.tables.items()})
    return LossReport(report.tenors, tuple(models), tables)


def _scope_matrices(records, models, tenors) -> dict[str, LossMatrix]:
    """Per-day loss matrices: tenor-averaged (Overall) plus one per tenor."""
    overall = build_loss_matrix(records)
    out = {OVERALL: overall}
    per_model = {
        m: sorted((r for r in records if r.model == m), key=lambda r: r.target_date)
        for m in models
    }
    dates = overall.dates
    for j, tenor in enumerate(tenors):
        losses = np.column_stack(
            [np.asarray([abs(r.realized[j] - r.forecast[j]) for r in per_model[m]]) for m in models]
        )
        out[tenor] = LossMatrix(dates, tuple(models), losses)
    return out


def run_expanding_backtest(
    config: BacktestConfig, futures: FuturesPanel, factors: FactorPanel | None = None
) -> BacktestRun:
    """Run the full experiment; see the module docstring for the scheme."""
    start = time.perf_counter()
    prices, factor_panel = _prepare(config, futures, factors)
    log_prices = to_log_prices(prices)
    returns = to_log_returns(prices)
    n = returns.n_days
    first = n - config.oos_len
    if config.oos_len < 1:
        raise ValueError("oos_len must be >= 1 for a backtest")
    if first < MIN_TRAIN:
        raise ValueError(
            f"oos_len {config.oos_len} leaves {first} training returns; "
            f"need at least {MIN_TRAIN}"
        )

    if not config.models:
        return BacktestRun(
            config=config,
            tenors=returns.tenors,
            target_dates=returns.dates[first:],
            records=(),
            loss_report=None,
            loss_matrix=None,
            mcs_results={},
            dm_results=(),
            decomposition=None,
            decomposition_dates=prices.dates[: first + 1],
            insample_returns=returns.values[:first, :],
            elapsed_seconds=time.perf_counter() - start,
        )

    records: list[ForecastRecord] = []
    for t in range(first, n):
        target_date = returns.dates[t]
        realized = returns.values[t, :]
        for model in config.models:
            try:
                forecast = _forecast_one(
                    model, t, prices, log_prices, returns, factor_panel, config.var_target
                )
            except Exception as exc:
                raise BacktestFailure(
                    f"model {model!r} failed for target {target_date.isoformat()} "
                    f"(training window of {t} returns)"
                ) from exc
            records.append(
                ForecastRecord(model, target_date, returns.tenors, forecast, realized)
            )

    insample_returns = returns.values[:first, :]
    loss_report = _merged_report(records, config.models, insample_returns)
    scopes = _scope_matrices(records, config.models, returns.tenors)
    loss_matrix = scopes[OVERALL]

    plan = BootstrapPlan(config.block_length, config.bootstrap_reps, config.seed)
    mcs_results: dict[tuple[str, float, str], McsResult] = {}
    for statistic in config.statistics:
        for alpha in config.alphas:
            for scope, matrix in scopes.items():
                mcs_results[(statistic, alpha, scope)] = mcs_run(matrix, alpha, statistic, plan)

    dm_results = []
    models = config.models
    if loss_matrix.losses.shape[0] >= 10:
        for i in range(len(models)):
            for j in range(i + 1, len(models)):
                a = loss_matrix.losses[:, i]
                b = loss_matrix.losses[:, j]
                stat, pvalue = dm_test(a, b)
                adj_stat, adj_p = modified_dm_test(a, b, horizon=1)
                dm_results.append(
                    DmComparison(models[i], models[j], stat, pvalue, adj_stat, adj_p)
                )

    decomposition = fit_fpca(log_prices.head(first + 1), config.var_target)
    return BacktestRun(
        config=config,
        tenors=returns.tenors,
        target_dates=returns.dates[first:],
        records=tuple(records),
        loss_report=loss_report,
        loss_matrix=loss_matrix,
        mcs_results=mcs_results,
        dm_results=tuple(dm_results),
        decomposition=decomposition,
        decomposition_dates=prices.dates[: first + 1],
        insample_returns=insample_returns,
        elapsed_seconds=time.perf_counter() - start,
    )


def run_insample_eval(
    config: BacktestConfig, futures: FuturesPanel, factors: FactorPanel | None = None
) -> LossReport:
    """Fit each model once on the training window (everything before the
    out-of-sample tail) and evaluate its one-step predictions in-sample.

    Measures: absolute error for every model; directional and asymmetric
    measures for all but the driftless benchmark.
    """
    prices, factor_panel = _prepare(config, futures, factors)
    log_prices = to_log_prices(prices)
    returns = to_log_returns(prices)
    n = returns.n_days
    first = n - config.oos_len
    if first < MIN_TRAIN:
        raise ValueError(f"training window of {first} returns is below {MIN_TRAIN}")

    # Training span: price rows 0..first, return rows 0..first-1. Predictions
    # are evaluated on return rows 1..first-1 (every model can cover those).
    train_prices = prices.head(first + 1)
    train_log_prices = log_prices.head(first + 1)
    train_returns = returns.values[:first, :]
    eval_slice = slice(1, first)
    eval_dates = returns.dates[1:first]
    realized = returns.values[eval_slice, :]

    predictions: dict[str, np.ndarray] = {}
    for model in config.models:
        if model == "fts":
            decomposition = fit_fpca(train_log_prices, config.var_target)
            score_preds = np.empty_like(decomposition.scores)
            for k in range(decomposition.n_components):
                fit = ets_fit(decomposition.scores[:, k])
                score_preds[:, k] = fit.predictions
            curves = decomposition.mean_curve[None, :] + score_preds @ decomposition.eigenfunctions.T
            # predicted return row t = predicted curve at price row t+1
            # minus the observed curve at price row t
            pred_returns = curves[1:, :] - train_log_prices.values[:-1, :]
            predictions[model] = pred_returns[eval_slice, :]
        elif model == "fundamental":
            assert factor_panel is not None
            # change row i is dated like return row i; regress return row t
            # on change row t-1, so fitted rows are t = 1..first-1
            _, changes = factor_panel.head(first + 1).log_changes()
            predictions[model] = _lagged_fitted(changes[:-1, :], train_returns[1:, :])
        elif model == "pc":
            # score row s belongs to price row s; return row t's lagged
            # regressor is score row t, so all return rows are covered
            directions = _leading_components(train_prices.values, 3)
            centered = train_prices.values - train_prices.values.mean(axis=0)
            scores = centered @ directions
            fitted = _lagged_fitted(scores[:-1, :], train_returns)
            predictions[model] = fitted[eval_slice, :]
        elif model == "rw":
            predictions[model] = train_returns[:-1, :]
        else:
            raise ValueError(f"unknown model {model!r}")

    records = []
    for model in config.models:
        pred = predictions[model]
        if pred.shape != realized.shape:
            raise AssertionError(f"{model} prediction shape {pred.shape} vs {realized.shape}")
        for i, date in enumerate(eval_dates):
            records.append(
                ForecastRecord(model, date, returns.tenors, pred[i, :], realized[i, :])
            )

    non_rw = [r for r in records if r.model != "rw"]
    tables: dict[str, dict[str, MeasureTable]] = {"mae": {}}
    if non_rw:
        report = evaluate_records(non_rw, ("mae", "mme_under", "mme_over", "mcpdc"))
        tables = {k: dict(v) for k, v in report.tables.items()}
    if "rw" in config.models:
        rw_report = evaluate_records([r for r in records if r.model == "rw"], ("mae",))
        tables["mae"].update(rw_report.tables["mae"])
    return LossReport(returns.tenors, config.models, tables)


def _lagged_fitted(design: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Fitted values of per-tenor OLS; design row i belongs to target row i."""
    x = np.column_stack([np.ones(design.shape[0]), design])
    fitted = np.empty_like(targets)
    names = tuple(f"x{k}" for k in range(design.shape[1]))
    for j in range(targets.shape[1]):
        fit = ols_fit(design, targets[:, j], names)
        fitted[:, j] = x @ fit.coefficients
    return fitted
