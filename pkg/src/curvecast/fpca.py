"""Functional principal component decomposition of daily curve panels.

Curves are represented by their values at the (unequally spaced) tenor
nodes; integrals over the expiry continuum are approximated with trapezoid
quadrature, so the curve inner product is ``<u, v> = sum_i u_i v_i w_i``
with w the trapezoid weights. The covariance eigenproblem is solved in
weight-transformed (symmetric) form so eigenfunctions come out orthonormal
under that inner product.

Sign convention: every eigenfunction is flipped so its largest-magnitude
entry is positive, making refits of the same panel bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_io import FuturesPanel, _freeze, tenor_months
from .errors import (
    AllZeroEigenvaluesError,
    GridMismatchError,
    NumericalFailureError,
)

# Eigenvalues of an empirical covariance are >= 0 in exact arithmetic;
# rounding perturbs them by tiny amounts in either direction. Magnitudes
# within EIGENVALUE_ZERO_TOL are treated as exact zeros (excluded from the
# variance-share denominator); anything below -EIGENVALUE_ZERO_TOL is an
# error, not a clip.
EIGENVALUE_ZERO_TOL = 1e-10


@dataclass(frozen=True)
class FunctionGrid:
    """Quadrature grid over the expiry continuum.

    Attributes:
        nodes: tenor positions in months, strictly increasing.
        weights: trapezoid weights; positive, summing to the node span.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        nodes = _freeze(self.nodes)
        weights = _freeze(self.weights)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1-D and equally long")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")

    @classmethod
    def from_nodes(cls, nodes) -> "FunctionGrid":
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.shape[0] < 2:
            raise ValueError("need at least 2 nodes")
        w = np.empty_like(nodes)
        w[0] = (nodes[1] - nodes[0]) / 2.0
        w[-1] = (nodes[-1] - nodes[-2]) / 2.0
        w[1:-1] = (nodes[2:] - nodes[:-2]) / 2.0
        return cls(nodes, w)

    @classmethod
    def for_panel(cls, panel: FuturesPanel) -> "FunctionGrid":
        return cls.from_nodes([float(tenor_months(t)) for t in panel.tenors])

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        """Quadrature inner product approximating the continuum integral."""
        return float(np.sum(np.asarray(u) * np.asarray(v) * self.weights))


@dataclass(frozen=True)
class FpcaModel:
    """Fitted decomposition: mean curve, eigenpairs, per-day scores.

    ``eigenfunctions`` holds the retained columns (orthonormal under the
    grid inner product), ``eigenvalues`` the matching non-increasing
    variances, ``scores`` the projections of each centered day onto each
    retained eigenfunction.
    """

    grid: FunctionGrid
    mean_curve: np.ndarray
    eigenfunctions: np.ndarray
    eigenvalues: np.ndarray
    scores: np.ndarray
    explained_variance_ratio: float
    n_components: int

    def __post_init__(self) -> None:
        for name in ("mean_curve", "eigenfunctions", "eigenvalues", "scores"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))
        m = self.grid.size
        k = self.n_components
        if self.mean_curve.shape != (m,):
            raise ValueError("mean curve does not match grid size")
        if self.eigenfunctions.shape != (m, k) or self.eigenvalues.shape != (k,):
            raise ValueError("eigenpair shapes inconsistent with n_components")
        if self.scores.shape[1] != k:
            raise ValueError("score columns must match n_components")
        if np.any(np.diff(self.eigenvalues) > 0):
            raise ValueError("eigenvalues must be non-increasing")


def _panel_grid(panel: FuturesPanel) -> FunctionGrid:
    return FunctionGrid.for_panel(panel)


def estimate_mean(panel: FuturesPanel) -> np.ndarray:
    """Pointwise average curve across days."""
    if panel.n_days < 1:
        raise ValueError("need at least 1 day")
    return panel.values.mean(axis=0)


def estimate_covariance(panel: FuturesPanel, mean_curve: np.ndarray) -> np.ndarray:
    """Empirical covariance surface with divisor n; symmetric by construction."""
    if panel.n_days < 2:
        raise ValueError("need at least 2 days")
    centered = panel.values - np.asarray(mean_curve)[None, :]
    cov = centered.T @ centered / panel.n_days
    return (cov + cov.T) / 2.0


def eigendecompose(cov: np.ndarray, grid: FunctionGrid) -> tuple[np.ndarray, np.ndarray]:
    """Solve the weighted covariance eigenproblem.

    Returns all eigenvalues (descending) and eigenfunctions (columns),
    orthonormal under the grid inner product, signs fixed so the
    largest-magnitude entry of each eigenfunction is positive.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (grid.size, grid.size):
        raise ValueError("covariance shape does not match grid")
    if not np.allclose(cov, cov.T, rtol=1e-8, atol=1e-12):
        raise ValueError("covariance surface must be symmetric")
    sqrt_w = np.sqrt(grid.weights)
    sym = sqrt_w[:, None] * cov * sqrt_w[None, :]
    sym = (sym + sym.T) / 2.0
    try:
        vals, vecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError("symmetric eigensolver did not converge") from exc
    order = np.argsort(vals, kind="stable")[::-1]
    vals = vals[order]
    funcs = vecs[:, order] / sqrt_w[:, None]
    for k in range(funcs.shape[1]):
        col = funcs[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            funcs[:, k] = -col
    return vals, funcs


def select_K(eigenvalues: np.ndarray, var_target: float) -> int:
    """Smallest component count whose cumulative share of the positive
    eigenvalue mass reaches ``var_target``."""
    vals = np.asarray(eigenvalues, dtype=float)
    if np.any(np.diff(vals) > 1e-15):
        raise ValueError("eigenvalues must be sorted in descending order")
    if not 0.0 < var_target <= 1.0:
        raise ValueError("var_target must lie in (0, 1]")
    total = vals[vals > 0.0].sum()
    if total <= 0.0:
        raise AllZeroEigenvaluesError("no positive eigenvalues")
    cumulative = np.cumsum(np.clip(vals, 0.0, None)) / total
    return int(np.searchsorted(cumulative, var_target - 1e-12) + 1)


def compute_scores(panel: FuturesPanel, model: FpcaModel) -> np.ndarray:
    """Project each centered day onto the model's eigenfunctions."""
    grid = _panel_grid(panel)
    if not np.array_equal(grid.nodes, model.grid.nodes):
        raise GridMismatchError("panel tenor nodes differ from the fitted grid")
    centered = panel.values - model.mean_curve[None, :]
    return centered @ (model.grid.weights[:, None] * model.eigenfunctions)


def reconstruct(model: FpcaModel, scores: np.ndarray, n_components: int | None = None) -> np.ndarray:
    """Curves rebuilt from the mean plus the leading score-weighted components."""
    k = model.n_components if n_components is None else n_components
    if not 0 <= k <= model.n_components:
        raise ValueError(f"component count {k} outside [0, {model.n_components}]")
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    return model.mean_curve[None, :] + scores[:, :k] @ model.eigenfunctions[:, :k].T


def fit_fpca(panel: FuturesPanel, var_target: float = 0.99) -> FpcaModel:
    """Full decomposition pipeline: mean, covariance, eigenpairs, truncation, scores."""
    if panel.n_days < 2:
        raise ValueError("need at least 2 days to fit")
    grid = _panel_grid(panel)
    mean_curve = estimate_mean(panel)
    cov = estimate_covariance(panel, mean_curve)
    vals, funcs = eigendecompose(cov, grid)
    if np.any(vals < -EIGENVALUE_ZERO_TOL):
        raise NumericalFailureError(
            f"covariance eigenvalue {vals.min():.3e} below tolerated rounding floor"
        )
    vals = np.where(np.abs(vals) <= EIGENVALUE_ZERO_TOL, 0.0, vals)
    k = select_K(vals, var_target)
    total = vals[vals > 0.0].sum()
    centered = panel.values - mean_curve[None, :]
    scores = centered @ (grid.weights[:, None] * funcs[:, :k])
    return FpcaModel(
        grid=grid,
        mean_curve=mean_curve,
        eigenfunctions=funcs[:, :k],
        eigenvalues=vals[:k],
        scores=scores,
        explained_variance_ratio=float(vals[:k].sum() / total),
        n_components=k,
    )
