"""Loss suite vs. brute-force oracles, and the per-day loss matrix."""

import datetime
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvecast.errors import CoverageMismatchError, ZeroDenominatorError
from curvecast.evaluation import (
    OVER,
    UNDER,
    build_loss_matrix,
    evaluate_records,
    mae,
    mase,
    mcpdc,
    me,
    mme,
)
from curvecast.forecasters import ForecastRecord

TENORS = ("CL1", "CL2", "CL3")


def oracle_mae(errors):
    t, m = errors.shape
    per = [sum(abs(errors[i][j]) for i in range(t)) / t for j in range(m)]
    return per, sum(per) / m


def oracle_me(errors):
    t, m = errors.shape
    per = [sum(errors[i][j] for i in range(t)) / t for j in range(m)]
    return per, sum(per) / m


def oracle_mase(errors, series):
    t, m = errors.shape
    n = series.shape[0]
    per = []
    for j in range(m):
        denom = sum(abs(series[i][j] - series[i - 1][j]) for i in range(1, n)) / (n - 1)
        per.append(sum(abs(errors[i][j] / denom) for i in range(t)) / t)
    return per, sum(per) / m


def oracle_mme(errors, mode):
    t, m = errors.shape
    per = []
    for j in range(m):
        total = 0.0
        for i in range(t):
            e = errors[i][j]
            if e > 0:  # under-prediction
                total += math.sqrt(abs(e)) if mode == UNDER else abs(e)
            elif e < 0:  # over-prediction
                total += abs(e) if mode == UNDER else math.sqrt(abs(e))
        per.append(total / t)
    return per, sum(per) / m


def oracle_mcpdc(forecasts, realized):
    t, m = forecasts.shape
    per = []
    for j in range(m):
        hits = 0
        for i in range(t):
            sf = np.sign(forecasts[i][j])
            sr = np.sign(realized[i][j])
            if sf == sr and (sf != 0 or sr == 0):
                hits += 1
        per.append(hits / t)
    return per, sum(per) / m


class TestMae:
    def test_perfect_forecasts(self):
        assert mae(np.zeros((4, 3))).overall == 0.0

    def test_arithmetic(self):
        table = mae(np.array([[0.01], [-0.03]]))
        np.testing.assert_allclose(table.per_tenor, [0.02])
        assert table.overall == pytest.approx(0.02)

    def test_overall_is_mean_of_tenors(self):
        rng = np.random.default_rng(0)
        errors = rng.standard_normal((7, 5))
        table = mae(errors)
        assert abs(table.overall - table.per_tenor.mean()) <= 1e-12


class TestMe:
    def test_cancellation(self):
        assert me(np.array([[0.01], [-0.01]])).overall == 0.0

    def test_signed_mean(self):
        assert me(np.array([[0.02], [0.04]])).overall == pytest.approx(0.03)


class TestMase:
    def test_self_scaling(self):
        series = np.array([[0.0], [1.0], [2.0], [1.0]])  # mean |diff| = 1
        errors = np.array([[1.0], [-1.0]])
        assert mase(errors, series).overall == pytest.approx(1.0)

    def test_zero_errors(self):
        series = np.array([[0.0], [1.0]])
        assert mase(np.zeros((3, 1)), series).overall == 0.0

    def test_constant_series_rejected(self):
        with pytest.raises(ZeroDenominatorError):
            mase(np.ones((2, 1)), np.full((5, 1), 2.0))

    def test_naive_in_sample_self_consistency(self):
        # scoring the naive forecaster on exactly the differences that feed
        # its own denominator must give 1
        rng = np.random.default_rng(5)
        series = np.cumsum(rng.standard_normal((30, 3)), axis=0)
        naive_errors = np.diff(series, axis=0)
        table = mase(naive_errors, series)
        np.testing.assert_allclose(table.per_tenor, 1.0, rtol=1e-12)


class TestMme:
    def test_hand_evaluated(self):
        errors = np.array([[0.04], [-0.04]])
        under = mme(errors, UNDER)
        over = mme(errors, OVER)
        assert under.overall == pytest.approx(0.12)
        assert over.overall == pytest.approx(0.12)

    def test_all_zero(self):
        assert mme(np.zeros((3, 2)), UNDER).overall == 0.0
        assert mme(np.zeros((3, 2)), OVER).overall == 0.0

    def test_sign_flip_swaps_modes_exactly(self):
        rng = np.random.default_rng(7)
        errors = 0.05 * rng.standard_normal((20, 11))
        u1 = mme(errors, UNDER)
        o1 = mme(errors, OVER)
        u2 = mme(-errors, UNDER)
        o2 = mme(-errors, OVER)
        np.testing.assert_array_equal(u1.per_tenor, o2.per_tenor)
        np.testing.assert_array_equal(o1.per_tenor, u2.per_tenor)


class TestMcpdc:
    def test_perfect_direction(self):
        rng = np.random.default_rng(9)
        r = rng.standard_normal((10, 4)) + 0.01
        assert mcpdc(r, r).overall == 1.0

    def test_inverted_direction(self):
        rng = np.random.default_rng(10)
        r = rng.standard_normal((10, 4)) + 0.01
        assert mcpdc(-r, r).overall == 0.0

    def test_zero_tie_rules(self):
        f = np.array([[0.0], [0.0]])
        r = np.array([[0.0], [1.0]])
        assert mcpdc(f, r).per_tenor[0] == 0.5  # zero-zero correct, zero-nonzero not
        assert mcpdc(f, r, zero_ties_correct=False).per_tenor[0] == 0.0

    def test_positive_scale_invariance(self):
        rng = np.random.default_rng(11)
        f = rng.standard_normal((15, 3))
        r = rng.standard_normal((15, 3))
        a = mcpdc(f, r)
        b = mcpdc(2.5 * f, 0.1 * r)
        np.testing.assert_array_equal(a.per_tenor, b.per_tenor)


class TestMagnitudeOrdering:
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_mae_dominates_absolute_me(self, seed):
        rng = np.random.default_rng(seed)
        errors = rng.standard_normal((int(rng.integers(1, 20)), int(rng.integers(1, 6))))
        assert np.all(mae(errors).per_tenor >= np.abs(me(errors).per_tenor) - 1e-15)


class TestOracleEquivalence:
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_all_measures_match_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        t = int(rng.integers(1, 15))
        m = int(rng.integers(1, 6))
        errors = rng.standard_normal((t, m))
        forecasts = rng.standard_normal((t, m))
        realized = forecasts + errors
        series = np.cumsum(rng.standard_normal((max(2, t), m)), axis=0) + 0.1

        per, overall = oracle_mae(errors)
        np.testing.assert_allclose(mae(errors).per_tenor, per, atol=1e-10)
        assert abs(mae(errors).overall - overall) <= 1e-10

        per, overall = oracle_me(errors)
        np.testing.assert_allclose(me(errors).per_tenor, per, atol=1e-10)

        per, overall = oracle_mase(errors, series)
        np.testing.assert_allclose(mase(errors, series).per_tenor, per, atol=1e-10)

        for mode in (UNDER, OVER):
            per, overall = oracle_mme(errors, mode)
            np.testing.assert_allclose(mme(errors, mode).per_tenor, per, atol=1e-10)

        per, overall = oracle_mcpdc(forecasts, realized)
        np.testing.assert_allclose(mcpdc(forecasts, realized).per_tenor, per, atol=1e-10)


def record(model, day, forecast, realized):
    return ForecastRecord(
        model,
        datetime.date(2021, 1, 1) + datetime.timedelta(days=day),
        TENORS,
        np.asarray(forecast, dtype=float),
        np.asarray(realized, dtype=float),
    )


class TestLossMatrix:
    def test_perfect_model_zero_column(self):
        recs = [record("a", d, [1, 2, 3], [1, 2, 3]) for d in range(4)]
        matrix = build_loss_matrix(recs)
        np.testing.assert_array_equal(matrix.losses, 0.0)

    def test_identical_models_identical_columns(self):
        recs = []
        for d in range(5):
            f = [0.01 * d, 0.02, -0.01]
            r = [0.0, 0.03, 0.01]
            recs.append(record("a", d, f, r))
            recs.append(record("b", d, f, r))
        matrix = build_loss_matrix(recs)
        np.testing.assert_array_equal(matrix.losses[:, 0], matrix.losses[:, 1])

    def test_matches_per_cell_oracle(self):
        rng = np.random.default_rng(21)
        recs = []
        values = {}
        for model in ("a", "b", "c"):
            for d in range(6):
                f = rng.standard_normal(3)
                r = rng.standard_normal(3)
                recs.append(record(model, d, f, r))
                values[(model, d)] = (f, r)
        matrix = build_loss_matrix(recs)
        for j, model in enumerate(matrix.models):
            for i in range(6):
                f, r = values[(model, i)]
                oracle = sum(abs(r[k] - f[k]) for k in range(3)) / 3
                assert abs(matrix.losses[i, j] - oracle) <= 1e-12

    def test_coverage_mismatch(self):
        recs = [record("a", d, [1, 2, 3], [1, 2, 3]) for d in range(3)]
        recs += [record("b", d, [1, 2, 3], [1, 2, 3]) for d in range(2)]
        with pytest.raises(CoverageMismatchError):
            build_loss_matrix(recs)


class TestEvaluateRecords:
    def test_report_overall_equals_tenor_mean(self):
        rng = np.random.default_rng(3)
        recs = []
        for model in ("a", "b"):
            for d in range(8):
                recs.append(record(model, d, rng.standard_normal(3), rng.standard_normal(3)))
        report = evaluate_records(recs, ("mae", "me", "mme_under", "mme_over", "mcpdc"))
        for measure, by_model in report.tables.items():
            for table in by_model.values():
                assert abs(table.overall - table.per_tenor.mean()) <= 1e-12
