"""Loss functions over per-tenor forecast errors, plus the per-day loss
matrix consumed by the model-comparison engine.

Error orientation everywhere: ``error = realized - forecast``, so a
positive error is an under-prediction. Every measure reports one value per
tenor plus an Overall value equal to the arithmetic mean across tenors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data_io import _freeze
from .errors import CoverageMismatchError, ZeroDenominatorError
from .forecasters import ForecastRecord

UNDER = "under"
OVER = "over"


@dataclass(frozen=True)
class MeasureTable:
    """Per-tenor values and their Overall mean for one measure and model."""

    per_tenor: np.ndarray
    overall: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "per_tenor", _freeze(self.per_tenor))


@dataclass(frozen=True)
class LossReport:
    """measure -> model -> MeasureTable, for a fixed tenor ordering."""

    tenors: tuple[str, ...]
    models: tuple[str, ...]
    tables: Mapping[str, Mapping[str, MeasureTable]]


@dataclass(frozen=True)
class LossMatrix:
    """Per-day, per-model loss series (tenor-averaged absolute error)."""

    dates: tuple
    models: tuple[str, ...]
    losses: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "losses", _freeze(self.losses))
        if self.losses.shape != (len(self.dates), len(self.models)):
            raise ValueError("losses must be dates x models")

    def column(self, model: str) -> np.ndarray:
        return self.losses[:, self.models.index(model)]


def _check_errors(errors: np.ndarray) -> np.ndarray:
    e = np.asarray(errors, dtype=float)
    if e.ndim != 2 or e.shape[0] < 1:
        raise ValueError("errors must be a (days x tenors) matrix with >= 1 row")
    return e


def mae(errors: np.ndarray) -> MeasureTable:
    """Mean absolute error per tenor; Overall = mean across tenors."""
    e = _check_errors(errors)
    per = np.abs(e).mean(axis=0)
    return MeasureTable(per, float(per.mean()))


def me(errors: np.ndarray) -> MeasureTable:
    """Signed mean error per tenor (direction-aware)."""
    e = _check_errors(errors)
    per = e.mean(axis=0)
    return MeasureTable(per, float(per.mean()))


def mase(errors: np.ndarray, insample_series: np.ndarray) -> MeasureTable:
    """Absolute error scaled by the in-sample naive one-step error.

    Each tenor's denominator is the mean absolute first difference of that
    tenor's in-sample series; values below one beat the in-sample naive
    forecaster on average.
    """
    e = _check_errors(errors)
    s = np.asarray(insample_series, dtype=float)
    if s.ndim != 2 or s.shape[1] != e.shape[1]:
        raise ValueError("in-sample series must share the error tenor count")
    if s.shape[0] < 2:
        raise ValueError("in-sample series needs >= 2 rows")
    denom = np.abs(np.diff(s, axis=0)).mean(axis=0)
    if np.any(denom == 0.0):
        bad = int(np.flatnonzero(denom == 0.0)[0])
        raise ZeroDenominatorError(f"constant in-sample series at tenor index {bad}")
    per = np.abs(e / denom[None, :]).mean(axis=0)
    return MeasureTable(per, float(per.mean()))


def mme(errors: np.ndarray, mode: str) -> MeasureTable:
    """Asymmetric mixed error.

    ``mode=UNDER`` square-roots the under-predictions (errors > 0) and keeps
    over-predictions absolute, so under-predicting is penalized more when
    errors are below one; ``mode=OVER`` swaps the two sets. Zero errors
    belong to neither set. Normalization is 1/T jointly over both sums.
    """
    if mode not in (UNDER, OVER):
        raise ValueError(f"mode must be '{UNDER}' or '{OVER}'")
    e = _check_errors(errors)
    t = e.shape[0]
    under = np.where(e > 0.0, np.abs(e), 0.0)
    over = np.where(e < 0.0, np.abs(e), 0.0)
    if mode == UNDER:
        mixed = np.sqrt(under) + over
    else:
        mixed = under + np.sqrt(over)
    per = mixed.sum(axis=0) / t
    return MeasureTable(per, float(per.mean()))


def mcpdc(
    forecasts: np.ndarray, realized: np.ndarray, zero_ties_correct: bool = True
) -> MeasureTable:
    """Fraction of days the forecast sign matches the realized sign.

    Exact zeros: a zero forecast against a zero realization counts as
    correct when ``zero_ties_correct`` (default); any other zero pairing is
    incorrect.
    """
    f = np.asarray(forecasts, dtype=float)
    r = np.asarray(realized, dtype=float)
    if f.shape != r.shape or f.ndim != 2 or f.shape[0] < 1:
        raise ValueError("forecasts and realizations must be equal (days x tenors)")
    sf = np.sign(f)
    sr = np.sign(r)
    hits = (sf == sr) & (sf != 0.0)
    if zero_ties_correct:
        hits |= (sf == 0.0) & (sr == 0.0)
    per = hits.mean(axis=0)
    return MeasureTable(per, float(per.mean()))


def build_loss_matrix(records: Sequence[ForecastRecord]) -> LossMatrix:
    """Tenor-averaged absolute error per day per model.

    All models must cover identical (date, tenor) cells.
    """
    if not records:
        raise ValueError("no forecast records")
    models = tuple(dict.fromkeys(r.model for r in records))
    by_model: dict[str, dict] = {m: {} for m in models}
    for rec in records:
        if rec.target_date in by_model[rec.model]:
            raise CoverageMismatchError(
                f"duplicate record for model {rec.model} at {rec.target_date}"
            )
        by_model[rec.model][rec.target_date] = rec
    reference = sorted(by_model[models[0]])
    tenors = records[0].tenors
    for m in models:
        if sorted(by_model[m]) != reference:
            raise CoverageMismatchError(f"model {m} covers different dates")
        if any(rec.tenors != tenors for rec in by_model[m].values()):
            raise CoverageMismatchError(f"model {m} covers different tenors")
    losses = np.empty((len(reference), len(models)))
    for j, m in enumerate(models):
        for i, d in enumerate(reference):
            rec = by_model[m][d]
            losses[i, j] = np.abs(rec.realized - rec.forecast).mean()
    return LossMatrix(tuple(reference), models, losses)


def evaluate_records(
    records: Sequence[ForecastRecord],
    measures: Sequence[str],
    insample_series: np.ndarray | None = None,
) -> LossReport:
    """Compute a LossReport for the given measures over forecast records.

    Measures: mae, me, mase (needs ``insample_series``), mme_under,
    mme_over, mcpdc.
    """
    if not records:
        raise ValueError("no forecast records")
    models = tuple(dict.fromkeys(r.model for r in records))
    tenors = records[0].tenors
    tables: dict[str, dict[str, MeasureTable]] = {m: {} for m in measures}
    for model in models:
        recs = sorted((r for r in records if r.model == model), key=lambda r: r.target_date)
        forecast = np.vstack([r.forecast for r in recs])
        realized = np.vstack([r.realized for r in recs])
        errors = realized - forecast
        for measure in measures:
            if measure == "mae":
                tables[measure][model] = mae(errors)
            elif measure == "me":
                tables[measure][model] = me(errors)
            elif measure == "mase":
                if insample_series is None:
                    raise ValueError("mase requires the in-sample series")
                tables[measure][model] = mase(errors, insample_series)
            elif measure == "mme_under":
                tables[measure][model] = mme(errors, UNDER)
            elif measure == "mme_over":
                tables[measure][model] = mme(errors, OVER)
            elif measure == "mcpdc":
                tables[measure][model] = mcpdc(forecast, realized)
            else:
                raise ValueError(f"unknown measure {measure!r}")
    return LossReport(tenors, models, tables)
