"""Pipeline commands, chained through file artifacts in the output directory.

    corrindex select         -> constituents.csv
    corrindex allocate       -> weights.csv (+ linkage.csv, covariance.csv,
                                correlation.csv)
    corrindex build-index    -> index_returns.csv
    corrindex make-dataset   -> dataset{1,2}_{train,test}.csv
    corrindex run-experiment -> runs.csv, report.txt
    corrindex report         -> report.txt rebuilt from runs.csv

Every command validates its full configuration and inputs before producing
any output, and all files are written atomically (temp + rename). Exit codes:
0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import allocation, dataset, evaluation, index_builder, market_data, riskmodel, selection
from .config import STRATEGIES, ConfigError, PipelineConfig, load_config
from .market_data import PriceSeries, ReturnSeries

WEIGHT_LOAD_TOL = 1e-3


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def atomic_write_with(writer, target: Path) -> None:
    """Run a file-writing callable against a temp path, then rename into place."""
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_name(target.name + ".tmp")
    writer(tmp)
    os.replace(tmp, target)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _require_file(path: Path | None, what: str) -> Path:
    _require(path is not None, f"{what} is not configured")
    _require(path.is_file(), f"{what} not found: {path}")
    return path


def _price_path(cfg: PipelineConfig, ticker: str, factors: bool = False) -> Path:
    root = cfg.factors_dir if factors else cfg.prices_dir
    kind = "factor" if factors else "price"
    _require(root is not None, f"[data] {'factors_dir' if factors else 'prices_dir'} is not set")
    path = root / f"{ticker}.csv"
    _require(path.is_file(), f"{kind} file for {ticker!r} not found: {path}")
    return path


def _load_returns(cfg: PipelineConfig, tickers: tuple[str, ...], factors: bool = False):
    mode = "simple_price_only" if factors else cfg.dividend_mode
    out = []
    for ticker in tickers:
        series = market_data.load_price_csv(_price_path(cfg, ticker, factors), ticker=ticker)
        out.append(market_data.compute_returns(series, mode=mode, price_field=cfg.price_field))
    return out


# =============================================================================
# select
# =============================================================================


def cmd_select(cfg: PipelineConfig) -> int:
    _require(len(cfg.tickers) >= 2, "[data] tickers must list at least 2 companies")
    _require(
        cfg.k <= len(cfg.tickers),
        f"[selection] k = {cfg.k} exceeds the {len(cfg.tickers)}-company universe",
    )
    metrics_path = _require_file(cfg.metrics_csv, "[data] metrics_csv")
    for ticker in cfg.tickers:
        _price_path(cfg, ticker)

    fundamentals = selection.load_metrics_csv(metrics_path)
    missing = [t for t in cfg.tickers if t not in fundamentals]
    _require(not missing, f"metrics file has no rows for {missing}")

    returns = _load_returns(cfg, cfg.tickers)
    panel = market_data.align_calendars(returns, policy="intersect")
    market = selection.industry_average_returns(panel)

    universe = []
    for ticker in cfg.tickers:
        column = panel.column(ticker)
        raw = fundamentals[ticker]
        universe.append(
            selection.MetricVector(
                economic_impact=raw["economic_impact"],
                global_reach=raw["global_reach"],
                capital_expenditure=raw["capital_expenditure"],
                beta=selection.beta(column, market),
                kpi=raw["kpi"],
                volatility=selection.volatility(column),
            )
        )
    normalized = selection.normalize_metrics(universe)
    scored = [
        (ticker, selection.selection_score(m, cfg.selection_weights))
        for ticker, m in zip(cfg.tickers, normalized)
    ]
    ranked = selection.rank_universe(scored, cfg.k)
    by_ticker = dict(scored)
    lines = [f"{ticker},{by_ticker[ticker]!r}" for ticker in ranked]
    atomic_write_text(cfg.artifact("constituents.csv"), "\n".join(lines) + "\n")
    print(f"wrote {cfg.artifact('constituents.csv')} ({len(ranked)} constituents)")
    return 0


def _read_constituents(cfg: PipelineConfig) -> tuple[str, ...]:
    path = cfg.artifact("constituents.csv")
    if path.is_file():
        tickers = tuple(
            line.split(",")[0].strip()
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        )
        _require(len(tickers) >= 2, f"{path} lists fewer than 2 constituents")
        return tickers
    _require(len(cfg.tickers) >= 2, "no constituents.csv and [data] tickers not set")
    return cfg.tickers


# =============================================================================
# allocate
# =============================================================================


def _risk_model(cfg: PipelineConfig, tickers: tuple[str, ...]):
    returns = _load_returns(cfg, tickers)
    panel = market_data.align_calendars(returns, policy=cfg.align_policy)
    cov = riskmodel.covariance_matrix(panel)
    corr = riskmodel.correlation_matrix(cov)
    dist = riskmodel.correlation_distance(corr, convention=cfg.distance_convention)
    link = riskmodel.linkage(dist, method=cfg.linkage_method)
    return panel, cov, corr, link


def _allocate_weights(cfg: PipelineConfig, cov, link) -> allocation.Weights:
    if cfg.strategy == "hrp_walk":
        return allocation.hrp_dendrogram_walk(cov, link)
    if cfg.strategy == "hrp_bisection":
        return allocation.hrp_recursive_bisection(cov, allocation.quasi_diagonal_order(link))
    if cfg.strategy == "equal_weight":
        return allocation.equal_weight(cov.n, cov.tickers)
    if cfg.strategy == "min_variance":
        return allocation.min_variance_long_only(cov)[0]
    raise ConfigError(f"unknown strategy {cfg.strategy!r}; valid: {', '.join(STRATEGIES)}")


def cmd_allocate(cfg: PipelineConfig) -> int:
    tickers = _read_constituents(cfg)
    for ticker in tickers:
        _price_path(cfg, ticker)
    _, cov, corr, link = _risk_model(cfg, tickers)
    weights = _allocate_weights(cfg, cov, link)

    lines = [f"{t},{w:.4f}" for t, w in zip(weights.tickers, weights.values)]
    atomic_write_text(cfg.artifact("weights.csv"), "\n".join(lines) + "\n")

    atomic_write_with(
        lambda p: riskmodel.matrix_to_csv(cov.tickers, cov.values, p),
        cfg.artifact("covariance.csv"),
    )
    atomic_write_with(
        lambda p: riskmodel.matrix_to_csv(corr.tickers, corr.values, p),
        cfg.artifact("correlation.csv"),
    )
    atomic_write_with(lambda p: riskmodel.linkage_to_csv(link, p), cfg.artifact("linkage.csv"))

    print(f"strategy {cfg.strategy}")
    for ticker, weight in zip(weights.tickers, weights.values):
        print(f"  {ticker:<8} {weight:.4f}")
    print(f"wrote {cfg.artifact('weights.csv')}")
    return 0


def _load_weights_csv(path: Path) -> allocation.Weights:
    """Read a two-column weights file; renormalizes display rounding away."""
    tickers: list[str] = []
    values: list[float] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        ticker, _, raw = line.partition(",")
        tickers.append(ticker.strip())
        values.append(float(raw))
    vec = np.array(values)
    total = vec.sum()
    _require(
        abs(total - 1.0) <= WEIGHT_LOAD_TOL,
        f"{path}: weights sum to {total}, outside tolerance {WEIGHT_LOAD_TOL}",
    )
    _require(vec.min() >= 0, f"{path}: negative weight")
    return allocation.Weights(tickers=tuple(tickers), values=vec / total)


# =============================================================================
# build-index
# =============================================================================


def cmd_build_index(cfg: PipelineConfig) -> int:
    weights_path = _require_file(cfg.artifact("weights.csv"), "weights.csv (run allocate)")
    weights = _load_weights_csv(weights_path)
    for ticker in weights.tickers:
        _price_path(cfg, ticker)
    returns = _load_returns(cfg, weights.tickers)
    panel = market_data.align_calendars(returns, policy=cfg.align_policy)
    index = index_builder.build_index(weights, panel)

    target = cfg.artifact("index_returns.csv")
    atomic_write_with(lambda p: index_builder.index_to_csv(index, p), target)
    print(f"wrote {target} ({len(index)} days)")
    return 0


# =============================================================================
# make-dataset / run-experiment
# =============================================================================


def _load_index_series(cfg: PipelineConfig) -> ReturnSeries:
    if cfg.index_csv is not None:
        return index_builder.index_from_csv(_require_file(cfg.index_csv, "[data] index_csv"))
    artifact = cfg.artifact("index_returns.csv")
    _require(
        artifact.is_file(),
        "no index series: set [data] index_csv or run build-index first",
    )
    return index_builder.index_from_csv(artifact)


def _load_factor_series(cfg: PipelineConfig) -> list[ReturnSeries | PriceSeries]:
    """Factor columns enter as daily returns (default) or as raw levels."""
    for ticker in cfg.factor_tickers:
        _price_path(cfg, ticker, factors=True)
    if cfg.feature_mode == "levels":
        return [
            market_data.load_price_csv(_price_path(cfg, t, factors=True), ticker=t)
            for t in cfg.factor_tickers
        ]
    return _load_returns(cfg, cfg.factor_tickers, factors=True)


def _build_datasets(cfg: PipelineConfig, index: ReturnSeries, factors) -> dict[str, tuple]:
    out = {}
    matrix1, names1 = dataset.feature_matrix(index)
    ds1 = dataset.make_windows(matrix1, cfg.lookback, target_feature=0, feature_names=names1)
    out["dataset1"] = dataset.chronological_split(ds1, cfg.split_fraction)
    if factors:
        matrix2, names2 = dataset.feature_matrix(index, factors)
        ds2 = dataset.make_windows(matrix2, cfg.lookback, target_feature=0, feature_names=names2)
        out["dataset2"] = dataset.chronological_split(ds2, cfg.split_fraction)
    return out


def cmd_make_dataset(cfg: PipelineConfig) -> int:
    index = _load_index_series(cfg)
    factors = _load_factor_series(cfg) if cfg.factor_tickers else []
    splits = _build_datasets(cfg, index, factors)
    for name, (train_ds, test_ds) in splits.items():
        for split_name, split in (("train", train_ds), ("test", test_ds)):
            target = cfg.artifact(f"{name}_{split_name}.csv")
            atomic_write_with(lambda p, s=split: dataset.save_windows_csv(s, p), target)
            print(f"wrote {target} ({split.sample_count} samples, {split.feature_count} features)")
    return 0


def cmd_run_experiment(cfg: PipelineConfig) -> int:
    _require(
        len(cfg.factor_tickers) > 0,
        "[data] factor_tickers must be set: the experiment compares the "
        "index-only dataset against the factor-augmented dataset",
    )
    index = _load_index_series(cfg)
    factors = _load_factor_series(cfg)
    splits = _build_datasets(cfg, index, factors)

    cells = []
    for model_id in evaluation.MODEL_IDS:
        for dataset_id in evaluation.DATASET_IDS:
            train_ds, test_ds = splits[dataset_id]
            stats = evaluation.multi_run(
                model_id,
                train_ds,
                test_ds,
                cfg.train,
                dataset_id=dataset_id,
                max_workers=cfg.max_parallel,
            )
            # scaling is affine, so the unscaled-unit error is an exact rescale
            span = float(
                test_ds.scaler.feature_max[test_ds.target_feature]
                - test_ds.scaler.feature_min[test_ds.target_feature]
            )
            print(
                f"{model_id}/{dataset_id}: mean RMSE {stats.mean:.4f} scaled, "
                f"{stats.mean * span:.6f} in return units ({stats.run_count} runs)"
            )
            cells.append(stats)

    report = evaluation.comparison_report(cells, evaluation.config_fingerprint(cfg.train))
    atomic_write_text(cfg.artifact("runs.csv"), evaluation.runs_csv(report))
    atomic_write_text(cfg.artifact("report.txt"), evaluation.render_report(report))
    print(f"wrote {cfg.artifact('runs.csv')}")
    print(f"wrote {cfg.artifact('report.txt')}")
    return 0


def cmd_report(cfg: PipelineConfig) -> int:
    runs_path = _require_file(cfg.artifact("runs.csv"), "runs.csv (run run-experiment)")
    cells, fingerprint = evaluation.parse_runs_csv(runs_path.read_text(encoding="utf-8"))
    report = evaluation.comparison_report(cells, fingerprint)
    text = evaluation.render_report(report)
    atomic_write_text(cfg.artifact("report.txt"), text)
    print(text, end="")
    return 0


# =============================================================================
# entry point
# =============================================================================


COMMANDS = {
    "select": cmd_select,
    "allocate": cmd_allocate,
    "build-index": cmd_build_index,
    "make-dataset": cmd_make_dataset,
    "run-experiment": cmd_run_experiment,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrindex",
        description="Correlated-stock industry index pipeline",
    )
    parser.add_argument("--config", "-c", required=True, help="pipeline config file")
    parser.add_argument("--seed", type=int, default=None, help="override the training seed")
    parser.add_argument("--output-dir", default=None, help="override the output directory")
    parser.add_argument("--verbose", "-v", action="store_true", help="print tracebacks on errors")
    parser.add_argument("command", choices=sorted(COMMANDS), help="pipeline stage to run")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed_override=args.seed, output_override=args.output_dir)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure after validation
        if args.verbose:
            raise
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
