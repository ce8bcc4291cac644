import datetime
import math

import numpy as np
import pytest

from curvecast.data_io import (
    CANONICAL_TENOR_LABELS,
    ComponentSpec,
    FactorPanel,
    FuturesPanel,
    Scale,
    ScoreProcessSpec,
    SyntheticSpec,
)

MONTHS = np.array([1, 2, 3, 4, 5, 6, 7, 8, 9, 12, 18], dtype=float)


def make_dates(n, start=datetime.date(2020, 1, 1)):
    return tuple(start + datetime.timedelta(days=i) for i in range(n))


def make_panel(values, scale=Scale.PRICE, start=datetime.date(2020, 1, 1)):
    values = np.asarray(values, dtype=float)
    return FuturesPanel(
        dates=make_dates(values.shape[0], start),
        tenors=CANONICAL_TENOR_LABELS[: values.shape[1]],
        values=values,
        scale=scale,
    )


def make_factors(values, start=datetime.date(2020, 1, 1)):
    values = np.asarray(values, dtype=float)
    return FactorPanel(
        dates=make_dates(values.shape[0], start),
        columns=("SP500", "VIX", "USD", "EcPol"),
        values=values,
    )


@pytest.fixture
def random_price_panel():
    rng = np.random.default_rng(7)
    return make_panel(100.0 * np.exp(0.02 * rng.standard_normal((10, 11))))


def orthonormal_pair(nodes=MONTHS):
    """Two curves orthonormalized under trapezoid weights on the nodes."""
    nodes = np.asarray(nodes, dtype=float)
    w = np.empty_like(nodes)
    w[0] = (nodes[1] - nodes[0]) / 2
    w[-1] = (nodes[-1] - nodes[-2]) / 2
    w[1:-1] = (nodes[2:] - nodes[:-2]) / 2
    level = np.ones_like(nodes)
    slope = nodes - nodes.mean()
    level = level / math.sqrt(np.sum(level * level * w))
    slope = slope - level * np.sum(slope * level * w)
    slope = slope / math.sqrt(np.sum(slope * slope * w))
    return level, slope, w


def two_component_spec(noise_sd=0.0, eps1=0.10, eps2=0.06):
    """Rank-2 synthetic generator whose score dynamics match the damped-trend
    forecaster's model class; the second component carries enough variance to
    be retained at a 99% explained-share target."""
    level, slope, _ = orthonormal_pair()
    comps = (
        ComponentSpec(level, ScoreProcessSpec(0.9, 0.4, 0.05, 0.0, 0.02, eps1)),
        ComponentSpec(slope, ScoreProcessSpec(0.8, 0.4, 0.05, 0.0, -0.012, eps2)),
    )
    return SyntheticSpec(
        CANONICAL_TENOR_LABELS, np.linspace(4.0, 4.5, 11), comps, noise_sd=noise_sd
    )
