"""Model confidence set via circular moving-block bootstrap, plus pairwise
equal-accuracy tests.

The set procedure repeatedly tests equal predictive ability over the
surviving models, dropping the worst model while the hypothesis is
rejected. Two statistic kinds are supported: ``range`` (largest absolute
studentized pairwise mean differential) and ``max`` (largest studentized
relative mean differential). Variances of the mean differentials are
bootstrap estimates; the p-value is the share of recentered bootstrap
statistics at or above the observed one, so a degenerate all-zero
comparison yields p = 1 and everything survives.

One index matrix is drawn per run and reused across elimination steps, and
only time indices are resampled, so results are invariant to model
relabeling and the per-step p-value sequence does not depend on the level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .evaluation import LossMatrix

RANGE = "range"
MAX = "max"

AR_T_THRESHOLD = 1.96
AR_LAG_CAP = 10


@dataclass(frozen=True)
class BootstrapPlan:
    """Block resampling parameters; ``block_length=None`` selects it from
    the loss differentials (largest significant AR lag)."""

    block_length: int | None = None
    replications: int = 5000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.block_length is not None and self.block_length < 1:
            raise ValueError("block length must be >= 1")


@dataclass(frozen=True)
class Elimination:
    step: int
    model: str
    statistic: float
    pvalue: float


@dataclass(frozen=True)
class McsResult:
    """Superior set plus the order and evidence of each removal."""

    surviving: tuple[str, ...]
    eliminations: tuple[Elimination, ...]
    statistic: str
    alpha: float
    seed: int
    block_length: int
    replications: int

    def pvalue_for(self, model: str) -> float | None:
        for e in self.eliminations:
            if e.model == model:
                return e.pvalue
        return None


def loss_differentials(matrix: LossMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise differentials d[i,j,t] = loss_i,t - loss_j,t and each
    model's mean differential against the rest, d_rel[i,t]."""
    m = len(matrix.models)
    if m < 2:
        raise ValueError("need at least 2 models")
    losses = matrix.losses
    pair = losses.T[:, None, :] - losses.T[None, :, :]
    rel = pair.sum(axis=1) / (m - 1)
    return pair, rel


def _ar_largest_significant_lag(series: np.ndarray, cap: int) -> int:
    """Largest lag whose coefficient in an AR(cap) least-squares fit has
    |t| above the significance threshold; 0 when none or the fit is
    degenerate."""
    t_len = series.shape[0]
    y = series[cap:]
    design = np.column_stack(
        [np.ones(t_len - cap)] + [series[cap - k : t_len - k] for k in range(1, cap + 1)]
    )
    nobs, ncoef = design.shape
    if nobs <= ncoef:
        return 0
    gram = design.T @ design
    try:
        gram_inv = np.linalg.inv(gram)
    except np.linalg.LinAlgError:
        return 0
    coef = gram_inv @ design.T @ y
    resid = y - design @ coef
    sigma2 = float(resid @ resid) / (nobs - ncoef)
    if sigma2 <= 0.0:
        return 0
    se = np.sqrt(np.clip(sigma2 * np.diag(gram_inv), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstats = np.where(se > 0.0, coef / se, 0.0)
    significant = np.flatnonzero(np.abs(tstats[1:]) > AR_T_THRESHOLD)
    return int(significant[-1] + 1) if significant.size else 0


def select_block_length(differentials: np.ndarray) -> int:
    """Bootstrap block length: the largest significant AR lag across all
    differential series, floored at 1.

    Accepts the (m, m, T) pair tensor, a (series, T) matrix, or one series.
    """
    d = np.asarray(differentials, dtype=float)
    if d.ndim == 3:
        m = d.shape[0]
        rows = [d[i, j, :] for i in range(m) for j in range(i + 1, m)]
    elif d.ndim == 2:
        rows = list(d)
    else:
        rows = [d]
    t_len = rows[0].shape[0]
    if t_len < 10:
        raise ValueError("need at least 10 observations to select a block length")
    cap = max(1, min(AR_LAG_CAP, t_len // 5))
    best = 0
    for row in rows:
        if np.ptp(row) == 0.0:
            continue
        best = max(best, _ar_largest_significant_lag(row, cap))
    return max(1, best)


def block_bootstrap(n_obs: int, plan: BootstrapPlan) -> np.ndarray:
    """(replications, n_obs) matrix of resampled time indices.

    Blocks of ``plan.block_length`` consecutive indices wrap around the end
    of the sample; block starts are uniform over all positions. With block
    length 1 this is an iid bootstrap; with block length n_obs every
    replication is a cyclic run from a sampled offset.
    """
    p = plan.block_length
    if p is None:
        raise ValueError("plan block length must be resolved before resampling")
    if not 1 <= p <= n_obs:
        raise ValueError(f"block length {p} outside [1, {n_obs}]")
    rng = np.random.default_rng(plan.seed)
    n_blocks = -(-n_obs // p)
    starts = rng.integers(0, n_obs, size=(plan.replications, n_blocks))
    offsets = np.arange(p)
    idx = (starts[:, :, None] + offsets[None, None, :]) % n_obs
    return idx.reshape(plan.replications, n_blocks * p)[:, :n_obs]


def _pair_stats(d_bar: np.ndarray, d_star: np.ndarray):
    """Observed and recentered-bootstrap studentized pairwise statistics.

    Zero-variance pairs get t = 0; pairs that are zero-variance with a
    nonzero mean are reported for dominance elimination.
    """
    var = ((d_star - d_bar[None, :, :]) ** 2).mean(axis=0)
    sd = np.sqrt(var)
    zero = sd == 0.0
    dominated = zero & (d_bar != 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_obs = np.where(zero, 0.0, d_bar / np.where(zero, 1.0, sd))
        t_star = np.where(
            zero[None, :, :], 0.0, (d_star - d_bar[None, :, :]) / np.where(zero, 1.0, sd)
        )
    return t_obs, t_star, dominated


def mcs_run(
    matrix: LossMatrix, alpha: float, statistic: str, plan: BootstrapPlan
) -> McsResult:
    """Run the sequential elimination procedure at level ``alpha``.

    Stops when the equal-predictive-ability p-value reaches ``alpha`` or a
    single model remains; the surviving set is never empty.
    """
    if statistic not in (RANGE, MAX):
        raise ValueError(f"statistic must be '{RANGE}' or '{MAX}'")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    models = matrix.models
    t_len = matrix.losses.shape[0]
    if len(models) == 1:
        return McsResult(
            models, (), statistic, alpha, plan.seed, plan.block_length or 1, plan.replications
        )

    if plan.block_length is None:
        if t_len < 10:
            block = 1  # too short for the AR-based rule; iid resampling
        else:
            pair_full, _ = loss_differentials(matrix)
            block = select_block_length(pair_full)
    else:
        block = plan.block_length
        if block > max(1, t_len // 2):
            raise ValueError(f"block length {block} exceeds half the sample ({t_len})")
    resolved = BootstrapPlan(block, plan.replications, plan.seed)
    idx = block_bootstrap(t_len, resolved)

    boot_means = matrix.losses[idx, :].mean(axis=1)  # (B, m)
    full_means = matrix.losses.mean(axis=0)  # (m,)

    active = list(range(len(models)))
    eliminations: list[Elimination] = []
    step = 0
    while len(active) > 1:
        step += 1
        sub = np.asarray(active)
        means = full_means[sub]
        boots = boot_means[:, sub]
        d_bar = means[:, None] - means[None, :]
        d_star = boots[:, :, None] - boots[:, None, :]
        t_obs, t_star, dominated = _pair_stats(d_bar, d_star)

        if dominated.any():
            # Zero bootstrap variance with a nonzero mean differential:
            # the higher-loss side of the worst such pair is eliminated
            # outright, no test statistic exists for it.
            i, j = np.unravel_index(np.argmax(np.where(dominated, d_bar, -np.inf)), d_bar.shape)
            worst = active[i if d_bar[i, j] > 0 else j]
            eliminations.append(Elimination(step, models[worst], math.inf, 0.0))
            active.remove(worst)
            continue

        if statistic == RANGE:
            observed = float(np.abs(t_obs).max())
            boot_stats = np.abs(t_star).max(axis=(1, 2))
        else:
            rel_bar = d_bar.sum(axis=1) / (len(active) - 1)
            rel_star = d_star.sum(axis=2) / (len(active) - 1)
            var_rel = ((rel_star - rel_bar[None, :]) ** 2).mean(axis=0)
            sd_rel = np.sqrt(var_rel)
            zero = sd_rel == 0.0
            t_rel = np.where(zero, 0.0, rel_bar / np.where(zero, 1.0, sd_rel))
            t_rel_star = np.where(
                zero[None, :], 0.0, (rel_star - rel_bar[None, :]) / np.where(zero, 1.0, sd_rel)
            )
            observed = float(t_rel.max())
            boot_stats = t_rel_star.max(axis=1)

        pvalue = float((boot_stats >= observed).mean())
        if pvalue >= alpha:
            break

        if statistic == RANGE:
            worst_local = int(np.argmax(t_obs.max(axis=1)))
        else:
            worst_local = int(np.argmax(t_rel))
        worst = active[worst_local]
        eliminations.append(Elimination(step, models[worst], observed, pvalue))
        active.remove(worst)

    surviving = tuple(models[i] for i in active)
    return McsResult(
        surviving, tuple(eliminations), statistic, alpha, plan.seed, block, plan.replications
    )


def _bartlett_lrv(d: np.ndarray) -> float:
    """Long-run variance with Bartlett weights, truncation floor(T^(1/3))."""
    t_len = d.shape[0]
    centered = d - d.mean()
    lags = int(math.floor(t_len ** (1.0 / 3.0)))
    lrv = float(centered @ centered) / t_len
    for k in range(1, lags + 1):
        gamma = float(centered[k:] @ centered[:-k]) / t_len
        lrv += 2.0 * (1.0 - k / (lags + 1.0)) * gamma
    return lrv


def dm_test(loss_a: np.ndarray, loss_b: np.ndarray) -> tuple[float, float]:
    """Equal-accuracy test: studentized mean loss differential against a
    standard normal; two-sided p-value.

    Identical loss series report (0.0, 1.0) rather than failing on the
    zero variance.
    """
    a = np.asarray(loss_a, dtype=float)
    b = np.asarray(loss_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("loss series must be equal-length 1-D arrays")
    t_len = a.shape[0]
    if t_len < 10:
        raise ValueError("need at least 10 observations")
    d = a - b
    mean = d.mean()
    lrv = _bartlett_lrv(d)
    if lrv <= 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean), 0.0
    stat = mean / math.sqrt(lrv / t_len)
    pvalue = 2.0 * float(stats.norm.sf(abs(stat)))
    return float(stat), pvalue


def dm_correction(t_len: int, horizon: int) -> float:
    """Small-sample correction factor for the modified equal-accuracy test."""
    h = horizon
    return math.sqrt((t_len + 1 - 2 * h + h * (h - 1) / t_len) / t_len)


def modified_dm_test(
    loss_a: np.ndarray, loss_b: np.ndarray, horizon: int = 1
) -> tuple[float, float]:
    """Small-sample-corrected variant: statistic scaled by the correction
    factor and referred to a Student-t with T-1 degrees of freedom."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    stat, _ = dm_test(loss_a, loss_b)
    t_len = np.asarray(loss_a).shape[0]
    if stat == 0.0:
        return 0.0, 1.0
    if math.isinf(stat):
        return stat, 0.0
    adjusted = stat * dm_correction(t_len, horizon)
    pvalue = 2.0 * float(stats.t.sf(abs(adjusted), df=t_len - 1))
    return adjusted, pvalue
