"""Panel ingestion, validation, transforms, and synthetic generation.

The two panel types are immutable once built: value arrays are copied and
frozen so panels can be shared across workers without locking. All dates are
trading-day indices (ISO strings in files, ``datetime.date`` in memory);
there is no calendar arithmetic anywhere.

CSV schemas
-----------
Futures: ``date,CL1,CL2,...,CL9,CL12,CL18`` (ISO dates, plain decimals).
Factors: ``date,SP500,VIX,USD,EcPol``.
"""

from __future__ import annotations

import csv
import datetime
import enum
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DuplicateDateError,
    EmptyIntersectionError,
    MissingCellError,
    NonOrthonormalSpecError,
    NonPositivePriceError,
    UnparseableRowError,
    WrongScaleError,
)
from .kv import parse_kv_file, parse_kv_text

CANONICAL_TENOR_LABELS = (
    "CL1", "CL2", "CL3", "CL4", "CL5", "CL6", "CL7", "CL8", "CL9", "CL12", "CL18",
)
FACTOR_COLUMNS = ("SP500", "VIX", "USD", "EcPol")

# 12-significant-digit floats: the canonical serialization used everywhere a
# panel or report is written, so emitted files are reproducible bit-for-bit.
FLOAT_FMT = "%.12g"


class Scale(enum.Enum):
    """Unit marker carried by every futures panel."""

    PRICE = "price"
    LOG_PRICE = "log_price"
    LOG_RETURN = "log_return"


def tenor_months(label: str) -> int:
    """Numeric month position of an expiry label, e.g. 'CL12' -> 12."""
    digits = "".join(ch for ch in label if ch.isdigit())
    if not digits:
        raise ValueError(f"tenor label {label!r} carries no month number")
    return int(digits)


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class FuturesPanel:
    """Date-indexed matrix of futures values at fixed expiry tenors.

    Attributes:
        dates: strictly increasing trading dates.
        tenors: expiry labels, month positions strictly increasing.
        values: (len(dates), len(tenors)) float matrix, read-only.
        scale: unit marker for ``values``.
    """

    dates: tuple[datetime.date, ...]
    tenors: tuple[str, ...]
    values: np.ndarray
    scale: Scale

    def __post_init__(self) -> None:
        values = _freeze(self.values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tenors", tuple(self.tenors))
        if values.ndim != 2 or values.shape != (len(self.dates), len(self.tenors)):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tenors)} tenors"
            )
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")
        months = self.month_positions
        if any(b <= a for a, b in zip(months, months[1:])):
            raise ValueError("tenor month positions must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("panel contains non-finite cells")
        if self.scale is Scale.PRICE and np.any(values <= 0.0):
            raise NonPositivePriceError("price panel contains values <= 0")

    @property
    def month_positions(self) -> tuple[int, ...]:
        return tuple(tenor_months(t) for t in self.tenors)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    def restrict_dates(self, keep: Sequence[datetime.date]) -> "FuturesPanel":
        """Sub-panel at the given dates (order preserved from self)."""
        wanted = set(keep)
        idx = [i for i, d in enumerate(self.dates) if d in wanted]
        return FuturesPanel(
            dates=tuple(self.dates[i] for i in idx),
            tenors=self.tenors,
            values=self.values[idx, :],
            scale=self.scale,
        )

    def head(self, n: int) -> "FuturesPanel":
        """First n rows, same tenors and scale."""
        return FuturesPanel(self.dates[:n], self.tenors, self.values[:n, :], self.scale)


@dataclass(frozen=True)
class FactorPanel:
    """Exogenous-factor levels (SP500, VIX, USD, EcPol) by trading date."""

    dates: tuple[datetime.date, ...]
    columns: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        values = _freeze(self.values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "columns", tuple(self.columns))
        if values.shape != (len(self.dates), len(self.columns)):
            raise ValueError("values shape does not match dates x columns")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("factor panel contains non-finite cells")
        if np.any(values <= 0.0):
            raise NonPositivePriceError("factor levels must be strictly positive")

    @property
    def n_days(self) -> int:
        return len(self.dates)

    def log_changes(self) -> tuple[tuple[datetime.date, ...], np.ndarray]:
        """Log-changes ln(F_t / F_{t-1}); dated from the second observation."""
        if len(self.dates) < 2:
            raise ValueError("need at least 2 rows for log changes")
        changes = np.diff(np.log(self.values), axis=0)
        return self.dates[1:], changes

    def restrict_dates(self, keep: Sequence[datetime.date]) -> "FactorPanel":
        wanted = set(keep)
        idx = [i for i, d in enumerate(self.dates) if d in wanted]
        return FactorPanel(
            dates=tuple(self.dates[i] for i in idx),
            columns=self.columns,
            values=self.values[idx, :],
        )

    def head(self, n: int) -> "FactorPanel":
        """First n rows, same columns."""
        return FactorPanel(self.dates[:n], self.columns, self.values[:n, :])


def _parse_date(token: str, lineno: int) -> datetime.date:
    try:
        return datetime.date.fromisoformat(token.strip())
    except ValueError as exc:
        raise UnparseableRowError(f"row {lineno}: bad date {token!r}") from exc


def _read_csv_rows(path: str | Path, expected_header: Sequence[str]):
    """Yield (lineno, date, raw string cells) after header validation."""
    text = Path(path).read_text()
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise UnparseableRowError(f"{path}: empty file") from None
    header = [h.strip() for h in header]
    if header != list(expected_header):
        raise UnparseableRowError(
            f"{path}: header {header} does not match expected {list(expected_header)}"
        )
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(expected_header):
            raise UnparseableRowError(
                f"row {lineno}: expected {len(expected_header)} cells, got {len(row)}"
            )
        yield lineno, _parse_date(row[0], lineno), [c.strip() for c in row[1:]]


def _fill_matrix(rows, columns, missing: str, positive: bool, what: str) -> tuple[list, np.ndarray]:
    dates = []
    seen: set[datetime.date] = set()
    out: list[list[float]] = []
    for lineno, date, cells in rows:
        if date in seen:
            raise DuplicateDateError(f"row {lineno}: duplicate date {date.isoformat()}")
        seen.add(date)
        vals: list[float] = []
        for col, cell in zip(columns, cells):
            if cell == "":
                if missing == "ffill" and out:
                    vals.append(out[-1][len(vals)])
                    continue
                raise MissingCellError(
                    f"missing {what} cell at date {date.isoformat()}, column {col}"
                )
            try:
                x = float(cell)
            except ValueError as exc:
                raise UnparseableRowError(
                    f"row {lineno}: cannot parse {cell!r} in column {col}"
                ) from exc
            if not math.isfinite(x):
                raise UnparseableRowError(f"row {lineno}: non-finite value in column {col}")
            if positive and x <= 0.0:
                raise NonPositivePriceError(
                    f"non-positive {what} {x} at date {date.isoformat()}, column {col}"
                )
            vals.append(x)
        dates.append(date)
        out.append(vals)
    if not dates:
        raise UnparseableRowError(f"no data rows in {what} file")
    order = np.argsort([d.toordinal() for d in dates], kind="stable")
    dates = [dates[i] for i in order]
    matrix = np.asarray(out, dtype=float)[order, :]
    return dates, matrix


def load_panel(
    path: str | Path,
    schema: Sequence[str] = CANONICAL_TENOR_LABELS,
    missing: str = "reject",
) -> FuturesPanel:
    """Load and validate a futures price CSV.

    Args:
        path: CSV with header ``date,<tenor labels...>``.
        schema: expected tenor labels, in file order.
        missing: ``reject`` (default) errors on any empty cell;
            ``ffill`` copies the previous day's value instead.

    Returns:
        A PRICE-scale panel, rows in ascending date order.
    """
    if missing not in ("reject", "ffill"):
        raise ValueError(f"unknown missing-cell policy {missing!r}")
    rows = _read_csv_rows(path, ["date", *schema])
    dates, matrix = _fill_matrix(rows, list(schema), missing, positive=True, what="price")
    return FuturesPanel(tuple(dates), tuple(schema), matrix, Scale.PRICE)


def load_factor_panel(path: str | Path, missing: str = "reject") -> FactorPanel:
    """Load and validate the exogenous-factor CSV (levels)."""
    if missing not in ("reject", "ffill"):
        raise ValueError(f"unknown missing-cell policy {missing!r}")
    rows = _read_csv_rows(path, ["date", *FACTOR_COLUMNS])
    dates, matrix = _fill_matrix(rows, list(FACTOR_COLUMNS), missing, positive=True, what="factor")
    return FactorPanel(tuple(dates), FACTOR_COLUMNS, matrix)


def write_panel_csv(panel: FuturesPanel, path: str | Path) -> None:
    """Emit a panel in the canonical CSV serialization (12 significant digits)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", *panel.tenors])
        for date, row in zip(panel.dates, panel.values):
            writer.writerow([date.isoformat(), *(FLOAT_FMT % x for x in row)])


def to_log_prices(panel: FuturesPanel) -> FuturesPanel:
    """Elementwise log transform; marker PRICE -> LOG_PRICE."""
    if panel.scale is not Scale.PRICE:
        raise WrongScaleError(f"expected PRICE panel, got {panel.scale.name}")
    return FuturesPanel(panel.dates, panel.tenors, np.log(panel.values), Scale.LOG_PRICE)


def from_log_prices(panel: FuturesPanel) -> FuturesPanel:
    """Inverse of to_log_prices; marker LOG_PRICE -> PRICE."""
    if panel.scale is not Scale.LOG_PRICE:
        raise WrongScaleError(f"expected LOG_PRICE panel, got {panel.scale.name}")
    return FuturesPanel(panel.dates, panel.tenors, np.exp(panel.values), Scale.PRICE)


def to_log_returns(panel: FuturesPanel) -> FuturesPanel:
    """Per-tenor log returns ln(P_t / P_{t-1}); the first row is dropped."""
    if panel.scale is not Scale.PRICE:
        raise WrongScaleError(f"expected PRICE panel, got {panel.scale.name}")
    if panel.n_days < 2:
        raise ValueError("need at least 2 rows to compute returns")
    returns = np.diff(np.log(panel.values), axis=0)
    return FuturesPanel(panel.dates[1:], panel.tenors, returns, Scale.LOG_RETURN)


def align_panels(futures: FuturesPanel, factors: FactorPanel) -> tuple[FuturesPanel, FactorPanel]:
    """Restrict both panels to their common dates, order preserved."""
    if futures.n_days == 0 or factors.n_days == 0:
        raise ValueError("cannot align an empty panel")
    common = set(futures.dates) & set(factors.dates)
    if not common:
        raise EmptyIntersectionError("futures and factor panels share no dates")
    return futures.restrict_dates(common), factors.restrict_dates(common)


def descriptive_stats(panel: "FuturesPanel | FactorPanel") -> dict[str, np.ndarray]:
    """Per-column mean/std/median/min/max/skewness/kurtosis.

    Conventions: std uses divisor n-1; skewness is the third standardized
    moment (divisor n); kurtosis is excess kurtosis (normal -> 0). Constant
    columns report NaN for skewness and kurtosis.
    """
    columns = panel.tenors if isinstance(panel, FuturesPanel) else panel.columns
    x = np.asarray(panel.values, dtype=float)
    if x.shape[0] < 2:
        raise ValueError("need at least 2 rows for descriptive stats")
    mean = x.mean(axis=0)
    centered = x - mean
    m2 = (centered**2).mean(axis=0)
    m3 = (centered**3).mean(axis=0)
    m4 = (centered**4).mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        skew = m3 / m2**1.5
        kurt = m4 / m2**2 - 3.0
    skew = np.where(m2 > 0.0, skew, np.nan)
    kurt = np.where(m2 > 0.0, kurt, np.nan)
    return {
        "column": np.asarray(columns, dtype=object),
        "mean": mean,
        "std": x.std(axis=0, ddof=1),
        "median": np.median(x, axis=0),
        "min": x.min(axis=0),
        "max": x.max(axis=0),
        "skewness": skew,
        "kurtosis": kurt,
    }


@dataclass(frozen=True)
class ScoreProcessSpec:
    """Damped-trend dynamics driving one synthetic component's scores."""

    damping: float
    level_smoothing: float
    trend_smoothing: float
    initial_level: float
    initial_trend: float
    innovation_sd: float


@dataclass(frozen=True)
class ComponentSpec:
    """One synthetic component: node values of its curve plus score dynamics."""

    curve: np.ndarray
    process: ScoreProcessSpec

    def __post_init__(self) -> None:
        object.__setattr__(self, "curve", _freeze(self.curve))


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator spec: mean curve + components + observation noise.

    ``scale`` declares what the generated values represent (default
    LOG_PRICE, matching how curves are modelled downstream).
    """

    tenors: tuple[str, ...]
    mean_curve: np.ndarray
    components: tuple[ComponentSpec, ...]
    noise_sd: float
    seed: int = 0
    n_days: int | None = None
    scale: Scale = Scale.LOG_PRICE

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean_curve", _freeze(self.mean_curve))
        object.__setattr__(self, "tenors", tuple(self.tenors))
        object.__setattr__(self, "components", tuple(self.components))
        m = len(self.tenors)
        if self.mean_curve.shape != (m,):
            raise ValueError("mean curve length must match tenor count")
        for comp in self.components:
            if comp.curve.shape != (m,):
                raise ValueError("component curve length must match tenor count")
        if self.noise_sd < 0:
            raise ValueError("noise sd must be >= 0")


def _trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    w = np.empty(nodes.shape[0])
    w[0] = (nodes[1] - nodes[0]) / 2.0
    w[-1] = (nodes[-1] - nodes[-2]) / 2.0
    w[1:-1] = (nodes[2:] - nodes[:-2]) / 2.0
    return w


def _check_orthonormal(spec: SyntheticSpec, tol: float = 1e-8) -> None:
    nodes = np.asarray([tenor_months(t) for t in spec.tenors], dtype=float)
    weights = _trapezoid_weights(nodes)
    basis = np.column_stack([c.curve for c in spec.components])
    gram = basis.T @ (weights[:, None] * basis)
    if not np.allclose(gram, np.eye(len(spec.components)), atol=tol):
        raise NonOrthonormalSpecError(
            "component curves are not orthonormal under the tenor-grid inner product"
        )


def _damped_trend_path(process: ScoreProcessSpec, innovations: np.ndarray) -> np.ndarray:
    """Scores from the level/growth recursion driven by given innovations."""
    level = process.initial_level
    trend = process.initial_trend
    out = np.empty(innovations.shape[0])
    for t, eps in enumerate(innovations):
        pred = level + process.damping * trend
        out[t] = pred + eps
        level = pred + process.level_smoothing * eps
        trend = process.damping * trend + process.trend_smoothing * eps
    return out


def simulate_panel(
    spec: SyntheticSpec, n_days: int | None = None, seed: int | None = None
) -> FuturesPanel:
    """Generate a synthetic panel: mean + sum of score-weighted curves + noise.

    Deterministic given the seed: each component's score innovations are
    drawn first (component order), then the observation-noise matrix.
    """
    n = spec.n_days if n_days is None else n_days
    if n is None or n < 2:
        raise ValueError("n_days must be >= 2")
    if spec.components:
        _check_orthonormal(spec)
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    values = np.tile(spec.mean_curve, (n, 1))
    for comp in spec.components:
        eps = comp.process.innovation_sd * rng.standard_normal(n)
        scores = _damped_trend_path(comp.process, eps)
        values += scores[:, None] * comp.curve[None, :]
    if spec.noise_sd > 0:
        values += spec.noise_sd * rng.standard_normal(values.shape)
    start = datetime.date(2000, 1, 3)
    dates = tuple(start + datetime.timedelta(days=i) for i in range(n))
    return FuturesPanel(dates, spec.tenors, values, spec.scale)


def _spec_floats(raw: str, key: str) -> np.ndarray:
    try:
        return np.asarray([float(tok) for tok in raw.split(",") if tok.strip()], dtype=float)
    except ValueError as exc:
        raise ValueError(f"synthetic spec key {key!r}: cannot parse float list") from exc


def parse_synthetic_spec(source: str | Path, is_text: bool = False) -> SyntheticSpec:
    """Parse the plain-text synthetic spec grammar (see README for keys)."""
    kv = parse_kv_text(source) if is_text else parse_kv_file(source)
    tenors = tuple(tok.strip() for tok in kv.pop("tenors").split(","))
    mean_curve = _spec_floats(kv.pop("mean"), "mean")
    noise_sd = float(kv.pop("noise_sd", "0"))
    seed = int(kv.pop("seed", "0"))
    n_days = int(kv["n_days"]) if "n_days" in kv else None
    kv.pop("n_days", None)
    scale = Scale(kv.pop("scale", Scale.LOG_PRICE.value))

    comp_keys: dict[int, dict[str, str]] = {}
    for key, value in kv.items():
        parts = key.split(".")
        if len(parts) != 3 or parts[0] != "component":
            raise ValueError(f"unknown synthetic spec key {key!r}")
        comp_keys.setdefault(int(parts[1]), {})[parts[2]] = value
    components = []
    for idx in sorted(comp_keys):
        fields = comp_keys[idx]
        process = ScoreProcessSpec(
            damping=float(fields.pop("xi", "0")),
            level_smoothing=float(fields.pop("delta", "1")),
            trend_smoothing=float(fields.pop("gamma", "0")),
            initial_level=float(fields.pop("l0", "0")),
            initial_trend=float(fields.pop("b0", "0")),
            innovation_sd=float(fields.pop("eps_sd", "0")),
        )
        curve = _spec_floats(fields.pop("curve"), f"component.{idx}.curve")
        if fields:
            raise ValueError(f"unknown component.{idx} keys: {sorted(fields)}")
        components.append(ComponentSpec(curve=curve, process=process))
    return SyntheticSpec(
        tenors=tenors,
        mean_curve=mean_curve,
        components=tuple(components),
        noise_sd=noise_sd,
        seed=seed,
        n_days=n_days,
        scale=scale,
    )
