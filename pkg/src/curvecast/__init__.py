"""curvecast: futures-curve forecasting and evaluation toolkit.

Pipeline: ingest a daily futures panel, decompose the curve history into
functional principal components, forecast component scores with damped-trend
exponential smoothing, benchmark against fundamental / discrete-PC /
random-walk models inside an expanding-window backtest, and rank the models
with a bootstrap model-confidence-set procedure.
"""

from .backtest import (
    BacktestConfig,
    BacktestRun,
    DmComparison,
    run_expanding_backtest,
    run_insample_eval,
)
from .data_io import (
    FactorPanel,
    FuturesPanel,
    Scale,
    SyntheticSpec,
    align_panels,
    descriptive_stats,
    load_factor_panel,
    load_panel,
    parse_synthetic_spec,
    simulate_panel,
    to_log_prices,
    to_log_returns,
    write_panel_csv,
)
from .ets import DampedTrendParams, EtsFit, ets_filter, ets_fit, ets_forecast
from .evaluation import (
    LossMatrix,
    LossReport,
    build_loss_matrix,
    evaluate_records,
    mae,
    mase,
    mcpdc,
    me,
    mme,
)
from .forecasters import (
    ForecastRecord,
    OlsFit,
    fts_forecast,
    fundamental_forecast,
    pc_forecast,
    rw_forecast,
)
from .fpca import (
    FpcaModel,
    FunctionGrid,
    compute_scores,
    eigendecompose,
    estimate_covariance,
    estimate_mean,
    fit_fpca,
    reconstruct,
    select_K,
)
from .mcs import (
    BootstrapPlan,
    McsResult,
    block_bootstrap,
    dm_test,
    loss_differentials,
    mcs_run,
    modified_dm_test,
    select_block_length,
)
from .reports import emit_backtest_reports, emit_insample_report, emit_stats_report

__version__ = "0.1.0"

__all__ = [
    "BacktestConfig",
    "BacktestRun",
    "BootstrapPlan",
    "DampedTrendParams",
    "DmComparison",
    "EtsFit",
    "FactorPanel",
    "ForecastRecord",
    "FpcaModel",
    "FunctionGrid",
    "FuturesPanel",
    "LossMatrix",
    "LossReport",
    "McsResult",
    "OlsFit",
    "Scale",
    "SyntheticSpec",
    "align_panels",
    "block_bootstrap",
    "build_loss_matrix",
    "compute_scores",
    "descriptive_stats",
    "dm_test",
    "eigendecompose",
    "emit_backtest_reports",
    "emit_insample_report",
    "emit_stats_report",
    "estimate_covariance",
    "estimate_mean",
    "ets_filter",
    "ets_fit",
    "ets_forecast",
    "evaluate_records",
    "fit_fpca",
    "fts_forecast",
    "fundamental_forecast",
    "load_factor_panel",
    "load_panel",
    "loss_differentials",
    "mae",
    "mase",
    "mcpdc",
    "mcs_run",
    "me",
    "mme",
    "modified_dm_test",
    "parse_synthetic_spec",
    "pc_forecast",
    "reconstruct",
    "run_expanding_backtest",
    "run_insample_eval",
    "rw_forecast",
    "select_K",
    "select_block_length",
    "simulate_panel",
    "to_log_prices",
    "to_log_returns",
    "write_panel_csv",
]
