"""Command-line interface.

Subcommands: ingest, insample, backtest, mcs, simulate, decompose. Every
flag can also be given in a plain-text key-value config file (``--config``);
explicit flags override file values, file values override defaults.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import sys
from pathlib import Path

import numpy as np

from .backtest import BacktestConfig, run_expanding_backtest, run_insample_eval
from .data_io import (
    FLOAT_FMT,
    from_log_prices,
    load_factor_panel,
    load_panel,
    parse_synthetic_spec,
    Scale,
    simulate_panel,
    to_log_prices,
    write_panel_csv,
)
from .errors import CurvecastError
from .evaluation import LossMatrix
from .fpca import fit_fpca
from .kv import parse_kv_file, parse_str_list
from .mcs import BootstrapPlan, mcs_run
from . import reports

DEFAULT_OUT = "curvecast-report"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key-value config file; flags override it")
    parser.add_argument("--out", help=f"output directory (default {DEFAULT_OUT})")


def _add_data(parser: argparse.ArgumentParser, factors: bool = True) -> None:
    parser.add_argument("--futures", help="futures price CSV (date,CL1,...,CL18)")
    if factors:
        parser.add_argument("--factors", help="factor level CSV (date,SP500,VIX,USD,EcPol)")
    parser.add_argument(
        "--missing", choices=["reject", "ffill"],
        help="empty-cell policy (default reject)",
    )


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--oos-len", dest="oos_len", help="out-of-sample days: 250|500|750|N")
    parser.add_argument("--p1", help="explained-variance target in (0,1], default 0.99")
    parser.add_argument("--models", help="comma list from pc,fts,fundamental,rw")
    parser.add_argument("--seed", help="integer seed (default 0)")


def _add_mcs_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", help="comma list of levels, default 0.25,0.10")
    parser.add_argument("--statistic", help="comma list from range,max (default both)")
    parser.add_argument("--bootstrap-reps", dest="bootstrap_reps", help="default 5000")
    parser.add_argument("--block-len", dest="block_len", help="auto or integer (default auto)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvecast", description="Futures-curve forecasting and evaluation toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a dataset and report descriptive statistics")
    _add_data(p)
    _add_common(p)

    p = sub.add_parser("insample", help="fit models once and score in-sample predictions")
    _add_data(p)
    _add_model_flags(p)
    _add_common(p)

    p = sub.add_parser("backtest", help="expanding-window out-of-sample experiment")
    _add_data(p)
    _add_model_flags(p)
    _add_mcs_flags(p)
    _add_common(p)

    p = sub.add_parser("mcs", help="model confidence set on an existing loss matrix")
    p.add_argument("--loss-matrix", dest="loss_matrix", help="CSV: date,<model columns>")
    _add_mcs_flags(p)
    p.add_argument("--seed", help="integer seed (default 0)")
    _add_common(p)

    p = sub.add_parser("simulate", help="generate a synthetic panel from a spec file")
    p.add_argument("--spec", help="synthetic spec (key-value grammar, see README)")
    p.add_argument("--n-days", dest="n_days", help="override the spec file day count")
    p.add_argument("--seed", help="override the spec file seed")
    _add_common(p)

    p = sub.add_parser("decompose", help="export the functional decomposition of a panel")
    _add_data(p, factors=False)
    p.add_argument("--p1", help="explained-variance target in (0,1], default 0.99")
    _add_common(p)

    return parser


def _resolve(args: argparse.Namespace, key: str, default=None):
    """Flag value if given, else config-file value, else default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    return args._file_config.get(key, default)


def _load_file_config(args: argparse.Namespace) -> None:
    args._file_config = parse_kv_file(args.config) if args.config else {}


def _build_config(args: argparse.Namespace) -> BacktestConfig:
    block = _resolve(args, "block_len", "auto")
    factors = _resolve(args, "factors")
    return BacktestConfig(
        oos_len=int(_resolve(args, "oos_len", 500)),
        var_target=float(_resolve(args, "p1", 0.99)),
        models=tuple(parse_str_list(str(_resolve(args, "models", "pc,fts,fundamental,rw")))),
        alphas=tuple(float(a) for a in parse_str_list(str(_resolve(args, "alpha", "0.25,0.10")))),
        statistics=tuple(parse_str_list(str(_resolve(args, "statistic", "range,max")))),
        bootstrap_reps=int(_resolve(args, "bootstrap_reps", 5000)),
        block_length=None if str(block) == "auto" else int(block),
        seed=int(_resolve(args, "seed", 0)),
        futures_path=str(_resolve(args, "futures")) if _resolve(args, "futures") else None,
        factors_path=str(factors) if factors else None,
    )


def _load_inputs(args: argparse.Namespace, need_factors: bool):
    futures_path = _resolve(args, "futures")
    if futures_path is None:
        raise CurvecastError("--futures is required (flag or config file)")
    missing = str(_resolve(args, "missing", "reject"))
    futures = load_panel(futures_path, missing=missing)
    factors_path = _resolve(args, "factors")
    factors = load_factor_panel(factors_path, missing=missing) if factors_path else None
    if need_factors and factors is None:
        raise CurvecastError("--factors is required for the fundamental model")
    return futures, factors


def _out_dir(args: argparse.Namespace) -> Path:
    return Path(str(_resolve(args, "out", DEFAULT_OUT)))


def _cmd_ingest(args) -> int:
    futures, factors = _load_inputs(args, need_factors=False)
    files = reports.emit_stats_report(futures, _out_dir(args), factors)
    print(f"validated {futures.n_days} days x {len(futures.tenors)} tenors")
    print(f"wrote {', '.join(files)} to {_out_dir(args)}")
    return 0


def _cmd_insample(args) -> int:
    config = _build_config(args)
    futures, factors = _load_inputs(args, need_factors="fundamental" in config.models)
    report = run_insample_eval(config, futures, factors)
    files = reports.emit_insample_report(report, config, _out_dir(args))
    print(f"wrote {', '.join(files)} to {_out_dir(args)}")
    return 0


def _cmd_backtest(args) -> int:
    config = _build_config(args)
    futures, factors = _load_inputs(args, need_factors="fundamental" in config.models)
    run = run_expanding_backtest(config, futures, factors)
    files = reports.emit_backtest_reports(run, _out_dir(args))
    print(f"backtest of {len(run.target_dates)} days, models: {', '.join(config.models) or 'none'}")
    if run.loss_report is not None:
        for model in config.models:
            overall = run.loss_report.tables["mae"][model].overall
            print(f"  {model}: overall MAFE {overall:.6f}")
    print(f"wrote {', '.join(files)} to {_out_dir(args)}")
    return 0


def _load_loss_matrix(path: str | Path) -> LossMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "date" or len(header) < 2:
            raise CurvecastError("loss matrix header must be 'date,<model>,...'")
        models = tuple(header[1:])
        dates, rows = [], []
        for row in reader:
            if not row:
                continue
            dates.append(datetime.date.fromisoformat(row[0]))
            rows.append([float(x) for x in row[1:]])
    return LossMatrix(tuple(dates), models, np.asarray(rows))


def _cmd_mcs(args) -> int:
    path = _resolve(args, "loss_matrix")
    if path is None:
        raise CurvecastError("--loss-matrix is required")
    matrix = _load_loss_matrix(path)
    alphas = [float(a) for a in parse_str_list(str(_resolve(args, "alpha", "0.25,0.10")))]
    statistics = parse_str_list(str(_resolve(args, "statistic", "range,max")))
    block = _resolve(args, "block_len", "auto")
    plan = BootstrapPlan(
        block_length=None if str(block) == "auto" else int(block),
        replications=int(_resolve(args, "bootstrap_reps", 5000)),
        seed=int(_resolve(args, "seed", 0)),
    )
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    membership, eliminations = [], []
    for statistic in statistics:
        for alpha in alphas:
            result = mcs_run(matrix, alpha, statistic, plan)
            flags = [1 if m in result.surviving else 0 for m in matrix.models]
            membership.append([statistic, FLOAT_FMT % alpha, *flags])
            for e in result.eliminations:
                eliminations.append(
                    [statistic, FLOAT_FMT % alpha, e.step, e.model,
                     FLOAT_FMT % e.statistic, FLOAT_FMT % e.pvalue]
                )
            print(f"{statistic} alpha={alpha}: superior set {{{', '.join(result.surviving)}}}")
    reports.write_csv_rows(out / "mcs_membership.csv", ["statistic", "alpha", *matrix.models], membership)
    reports.write_csv_rows(
        out / "mcs_eliminations.csv",
        ["statistic", "alpha", "step", "model", "statistic_value", "pvalue"],
        eliminations,
    )
    reports.write_manifest(out, "mcs", None, ["mcs_membership.csv", "mcs_eliminations.csv"])
    print(f"wrote mcs_membership.csv, mcs_eliminations.csv, manifest.txt to {out}")
    return 0


def _cmd_simulate(args) -> int:
    spec_path = _resolve(args, "spec")
    if spec_path is None:
        raise CurvecastError("--spec is required")
    spec = parse_synthetic_spec(spec_path)
    n_days = _resolve(args, "n_days")
    seed = _resolve(args, "seed")
    panel = simulate_panel(
        spec,
        n_days=None if n_days is None else int(n_days),
        seed=None if seed is None else int(seed),
    )
    if panel.scale is Scale.LOG_PRICE:
        panel = from_log_prices(panel)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    write_panel_csv(panel, out / "panel.csv")
    reports.write_manifest(out, "simulate", None, ["panel.csv"])
    print(f"wrote panel.csv ({panel.n_days} days x {len(panel.tenors)} tenors) to {out}")
    return 0


def _cmd_decompose(args) -> int:
    futures, _ = _load_inputs(args, need_factors=False)
    var_target = float(_resolve(args, "p1", 0.99))
    model = fit_fpca(to_log_prices(futures), var_target)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    files = reports.write_decomposition(model, out, dates=futures.dates)
    reports.write_manifest(out, "decompose", None, files)
    print(
        f"{model.n_components} components explain "
        f"{100 * model.explained_variance_ratio:.2f}% of curve variance"
    )
    print(f"wrote {', '.join(sorted(files + ['manifest.txt']))} to {out}")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "insample": _cmd_insample,
    "backtest": _cmd_backtest,
    "mcs": _cmd_mcs,
    "simulate": _cmd_simulate,
    "decompose": _cmd_decompose,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _load_file_config(args)
    try:
        return _COMMANDS[args.command](args)
    except CurvecastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
