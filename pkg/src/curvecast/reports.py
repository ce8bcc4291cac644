"""Report emission: delimited tables plus rendered figures.

Every run writes a manifest naming the exact file set, the configuration,
the seed, and library versions. All floats are serialized at 12
significant digits and figures are rendered on the Agg backend with fixed
geometry, so re-emitting the same run reproduces every file byte-for-byte.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numba
import numpy as np
import scipy

from .backtest import OVERALL, BacktestConfig, BacktestRun
from .data_io import FLOAT_FMT, FuturesPanel, descriptive_stats
from .errors import IoFailureError
from .evaluation import LossReport
from .fpca import FpcaModel

PACKAGE_VERSION = "0.1.0"

# Reported measure names: plain keys for in-sample predictions, forecast
# variants for out-of-sample runs.
MEASURE_LABELS_IN = {
    "mae": "MAE",
    "me": "ME",
    "mase": "MASE",
    "mme_under": "MME(U)",
    "mme_over": "MME(O)",
    "mcpdc": "MCPDC",
}
MEASURE_LABELS_OUT = {
    "mae": "MAFE",
    "me": "MFE",
    "mase": "MASFE",
    "mme_under": "MMFE(U)",
    "mme_over": "MMFE(O)",
    "mcpdc": "MCFDC",
}

FIG_DPI = 150


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def write_csv_rows(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise IoFailureError(f"cannot write {path}") from exc


def _loss_table_rows(report: LossReport, labels) -> tuple[list, list]:
    header = ["measure", "expiry", *report.models]
    rows = []
    for measure, by_model in report.tables.items():
        label = labels[measure]
        overall = [
            _fmt(by_model[m].overall) if m in by_model else "" for m in report.models
        ]
        rows.append([label, "Overall", *overall])
        for j, tenor in enumerate(report.tenors):
            cells = [
                _fmt(by_model[m].per_tenor[j]) if m in by_model else ""
                for m in report.models
            ]
            rows.append([label, tenor, *cells])
    return header, rows


def write_loss_report(report: LossReport, path: Path, out_of_sample: bool) -> None:
    labels = MEASURE_LABELS_OUT if out_of_sample else MEASURE_LABELS_IN
    header, rows = _loss_table_rows(report, labels)
    write_csv_rows(path, header, rows)


def write_decomposition(model: FpcaModel, out_dir: Path, dates=None) -> list[str]:
    """CSV bundle for a fitted decomposition: mean, eigenpairs, scores."""
    files = []
    months = model.grid.nodes
    write_csv_rows(
        out_dir / "fpca_mean.csv",
        ["month", "mean"],
        [[_fmt(m), _fmt(v)] for m, v in zip(months, model.mean_curve)],
    )
    files.append("fpca_mean.csv")
    comp_names = [f"component_{k + 1}" for k in range(model.n_components)]
    write_csv_rows(
        out_dir / "fpca_eigenfunctions.csv",
        ["month", *comp_names],
        [
            [_fmt(m), *(_fmt(v) for v in row)]
            for m, row in zip(months, model.eigenfunctions)
        ],
    )
    files.append("fpca_eigenfunctions.csv")
    write_csv_rows(
        out_dir / "fpca_eigenvalues.csv",
        ["component", "eigenvalue"],
        [[k + 1, _fmt(v)] for k, v in enumerate(model.eigenvalues)],
    )
    files.append("fpca_eigenvalues.csv")
    if dates is None:
        index = [str(i) for i in range(model.scores.shape[0])]
    else:
        index = [d.isoformat() for d in dates]
    write_csv_rows(
        out_dir / "fpca_scores.csv",
        ["date", *comp_names],
        [[ix, *(_fmt(v) for v in row)] for ix, row in zip(index, model.scores)],
    )
    files.append("fpca_scores.csv")
    files.append(plot_decomposition(model, out_dir / "fig_decomposition.png"))
    return files


def plot_decomposition(model: FpcaModel, path: Path) -> str:
    """Render mean curve, eigenfunctions, and score paths to one figure."""
    fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.6), dpi=FIG_DPI)
    months = model.grid.nodes
    axes[0].plot(months, model.mean_curve, marker="o", color="black")
    axes[0].set_title("Mean curve")
    axes[0].set_xlabel("expiry (months)")
    for k in range(model.n_components):
        share = 100.0 * model.eigenvalues[k] / max(model.eigenvalues.sum(), 1e-300)
        axes[1].plot(months, model.eigenfunctions[:, k], marker="o",
                     label=f"component {k + 1} ({share:.1f}%)")
        axes[2].plot(model.scores[:, k], lw=0.8, label=f"component {k + 1}")
    axes[1].set_title("Eigenfunctions")
    axes[1].set_xlabel("expiry (months)")
    axes[1].legend(fontsize=8)
    axes[2].set_title("Scores")
    axes[2].set_xlabel("day")
    axes[2].legend(fontsize=8)
    fig.tight_layout()
    try:
        fig.savefig(path)
    except OSError as exc:
        raise IoFailureError(f"cannot write {path}") from exc
    finally:
        plt.close(fig)
    return path.name


def plot_loss_by_tenor(report: LossReport, path: Path, out_of_sample: bool) -> str:
    """Per-tenor absolute-error profile, one line per model."""
    label = (MEASURE_LABELS_OUT if out_of_sample else MEASURE_LABELS_IN)["mae"]
    fig, ax = plt.subplots(figsize=(7.0, 4.0), dpi=FIG_DPI)
    x = np.arange(len(report.tenors))
    for model in report.models:
        table = report.tables["mae"].get(model)
        if table is None:
            continue
        ax.plot(x, table.per_tenor, marker="o", label=model)
    ax.set_xticks(x)
    ax.set_xticklabels(report.tenors, rotation=45)
    ax.set_ylabel(label)
    ax.set_title(f"{label} by expiry")
    ax.legend()
    fig.tight_layout()
    try:
        fig.savefig(path)
    except OSError as exc:
        raise IoFailureError(f"cannot write {path}") from exc
    finally:
        plt.close(fig)
    return path.name


def _manifest_lines(kind: str, config: BacktestConfig | None, files: list[str]) -> list[str]:
    lines = ["curvecast run manifest", f"kind = {kind}"]
    if config is not None:
        if config.futures_path:
            lines.append(f"futures = {config.futures_path}")
        if config.factors_path:
            lines.append(f"factors = {config.factors_path}")
        lines += [
            f"oos_len = {config.oos_len}",
            f"p1 = {_fmt(config.var_target)}",
            f"models = {','.join(config.models)}",
            f"alpha = {','.join(_fmt(a) for a in config.alphas)}",
            f"statistic = {','.join(config.statistics)}",
            f"bootstrap_reps = {config.bootstrap_reps}",
            f"block_len = {'auto' if config.block_length is None else config.block_length}",
            f"seed = {config.seed}",
        ]
    lines += [
        f"versions = curvecast {PACKAGE_VERSION}, numpy {np.__version__}, "
        f"scipy {scipy.__version__}, matplotlib {matplotlib.__version__}, "
        f"numba {numba.__version__}",
        "files:",
    ]
    lines += [f"  {name}" for name in sorted(files)]
    return lines


def write_manifest(out_dir: Path, kind: str, config, files: list[str]) -> None:
    text = "\n".join(_manifest_lines(kind, config, files)) + "\n"
    try:
        (out_dir / "manifest.txt").write_text(text)
    except OSError as exc:
        raise IoFailureError("cannot write manifest") from exc


def emit_backtest_reports(run: BacktestRun, out_dir: str | Path) -> list[str]:
    """Write the complete report set for an out-of-sample run.

    Returns the emitted file names (also listed in manifest.txt).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: list[str] = []

    if not run.records:
        write_manifest(out, "backtest (empty model set)", run.config, [])
        return ["manifest.txt"]

    rows = []
    for rec in run.records:
        for j, tenor in enumerate(rec.tenors):
            rows.append(
                [rec.model, rec.target_date.isoformat(), tenor,
                 _fmt(rec.forecast[j]), _fmt(rec.realized[j])]
            )
    write_csv_rows(out / "forecasts.csv", ["model", "target_date", "tenor", "forecast", "realized"], rows)
    files.append("forecasts.csv")

    write_loss_report(run.loss_report, out / "loss_oos.csv", out_of_sample=True)
    files.append("loss_oos.csv")

    matrix = run.loss_matrix
    write_csv_rows(
        out / "loss_matrix.csv",
        ["date", *matrix.models],
        [
            [d.isoformat(), *(_fmt(v) for v in row)]
            for d, row in zip(matrix.dates, matrix.losses)
        ],
    )
    files.append("loss_matrix.csv")

    scopes = [OVERALL, *run.tenors]
    membership_rows = []
    elimination_rows = []
    for statistic in run.config.statistics:
        for scope in scopes:
            for alpha in run.config.alphas:
                result = run.mcs_results[(statistic, alpha, scope)]
                flags = [1 if m in result.surviving else 0 for m in matrix.models]
                membership_rows.append([statistic, scope, _fmt(alpha), *flags])
                for e in result.eliminations:
                    elimination_rows.append(
                        [statistic, scope, _fmt(alpha), e.step, e.model,
                         _fmt(e.statistic), _fmt(e.pvalue)]
                    )
    write_csv_rows(
        out / "mcs_membership.csv",
        ["statistic", "expiry", "alpha", *matrix.models],
        membership_rows,
    )
    files.append("mcs_membership.csv")
    write_csv_rows(
        out / "mcs_eliminations.csv",
        ["statistic", "expiry", "alpha", "step", "model", "statistic_value", "pvalue"],
        elimination_rows,
    )
    files.append("mcs_eliminations.csv")

    if run.dm_results:
        write_csv_rows(
            out / "dm_tests.csv",
            ["model_a", "model_b", "dm_statistic", "dm_pvalue",
             "mdm_statistic", "mdm_pvalue"],
            [
                [r.model_a, r.model_b, _fmt(r.statistic), _fmt(r.pvalue),
                 _fmt(r.adjusted_statistic), _fmt(r.adjusted_pvalue)]
                for r in run.dm_results
            ],
        )
        files.append("dm_tests.csv")

    files += write_decomposition(run.decomposition, out, dates=run.decomposition_dates)
    files.append(plot_loss_by_tenor(run.loss_report, out / "fig_loss_by_tenor.png", True))

    write_manifest(out, "backtest", run.config, files)
    return sorted(files + ["manifest.txt"])


def emit_insample_report(
    report: LossReport, config: BacktestConfig, out_dir: str | Path
) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_loss_report(report, out / "loss_insample.csv", out_of_sample=False)
    files = ["loss_insample.csv"]
    files.append(plot_loss_by_tenor(report, out / "fig_loss_by_tenor.png", False))
    write_manifest(out, "insample", config, files)
    return sorted(files + ["manifest.txt"])


def emit_stats_report(panel: FuturesPanel, out_dir: str | Path, factors=None) -> list[str]:
    """Descriptive statistics (and a price-history figure) for ingested data."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    header = ["column", "mean", "std", "median", "min", "max", "skewness", "kurtosis"]

    def rows_for(stats: dict) -> list[list[str]]:
        names = stats["column"]
        return [
            [str(names[i])] + [_fmt(stats[k][i]) for k in header[1:]]
            for i in range(len(names))
        ]

    rows = rows_for(descriptive_stats(panel))
    if factors is not None:
        rows += rows_for(descriptive_stats(factors))
    write_csv_rows(out / "descriptive_stats.csv", header, rows)
    files.append("descriptive_stats.csv")

    fig, ax = plt.subplots(figsize=(8.0, 4.0), dpi=FIG_DPI)
    picks = [0, len(panel.tenors) // 2, len(panel.tenors) - 1]
    for j in sorted(set(picks)):
        ax.plot(range(panel.n_days), panel.values[:, j], lw=0.9, label=panel.tenors[j])
    ax.set_xlabel("trading day")
    ax.set_ylabel("value")
    ax.set_title("Futures history")
    ax.legend()
    fig.tight_layout()
    try:
        fig.savefig(out / "fig_history.png")
    finally:
        plt.close(fig)
    files.append("fig_history.png")

    write_manifest(out, "ingest", None, files)
    return sorted(files + ["manifest.txt"])
