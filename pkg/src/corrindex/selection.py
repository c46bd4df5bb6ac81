"""Constituent screening: per-company metrics and the composite selection score."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .market_data import AlignedPanel, ReturnSeries

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class MetricVector:
    """Six screening metrics for one company.

    `beta` and `volatility` come from price history; the rest from a
    fundamentals file. After `normalize_metrics` each slot holds the
    min-max-rescaled value, with `beta` holding the rescaled |beta - 1| term.
    """

    economic_impact: float
    global_reach: float
    capital_expenditure: float
    beta: float
    kpi: float
    volatility: float

    def __post_init__(self):
        values = (
            self.economic_impact,
            self.global_reach,
            self.capital_expenditure,
            self.beta,
            self.kpi,
            self.volatility,
        )
        if not all(np.isfinite(v) for v in values):
            raise ValueError(f"metrics must be finite, got {values}")
        if not 0.0 <= self.global_reach <= 1.0:
            raise ValueError(f"global_reach must lie in [0, 1], got {self.global_reach}")
        if self.volatility < 0:
            raise ValueError(f"volatility must be nonnegative, got {self.volatility}")


@dataclass(frozen=True, slots=True)
class SelectionWeights:
    """Nonnegative combiner weights w1..w6 summing to 1."""

    w1: float
    w2: float
    w3: float
    w4: float
    w5: float
    w6: float

    def __post_init__(self):
        if any(w < 0 for w in self.as_tuple()):
            raise ValueError(f"selection weights must be nonnegative, got {self.as_tuple()}")
        total = sum(self.as_tuple())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"selection weights must sum to 1, got {total!r}")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.w1, self.w2, self.w3, self.w4, self.w5, self.w6)

    @classmethod
    def equal(cls) -> "SelectionWeights":
        return cls(*(1.0 / 6.0,) * 6)


def _as_array(returns: ReturnSeries | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(returns, ReturnSeries):
        return np.asarray(returns.returns, dtype=float)
    return np.asarray(returns, dtype=float)


def beta(
    asset_returns: ReturnSeries | np.ndarray,
    market_returns: ReturnSeries | np.ndarray,
) -> float:
    """Cov(asset, market) / Var(market) with the sample (n-1) estimator throughout."""
    a = _as_array(asset_returns)
    m = _as_array(market_returns)
    if a.shape != m.shape or a.ndim != 1:
        raise ValueError(f"return series lengths differ: {a.shape} vs {m.shape}")
    n = a.shape[0]
    if n < 2:
        raise ValueError("need at least 2 returns to estimate beta")
    a_c = a - a.mean()
    m_c = m - m.mean()
    var_m = float(m_c @ m_c) / (n - 1)
    if var_m == 0.0:
        raise ValueError("market return variance is zero")
    cov_am = float(a_c @ m_c) / (n - 1)
    return cov_am / var_m


def volatility(returns: ReturnSeries | np.ndarray) -> float:
    """Sample standard deviation (n-1 denominator) of a return series."""
    r = _as_array(returns)
    if r.ndim != 1 or r.shape[0] < 2:
        raise ValueError("need at least 2 returns to estimate volatility")
    if np.all(r == r[0]):
        return 0.0
    return float(np.std(r, ddof=1))


def industry_average_returns(panel: AlignedPanel) -> np.ndarray:
    """Equal-weighted mean return across the universe, the market proxy for beta."""
    return panel.values.mean(axis=1)


_METRIC_FIELDS = (
    "economic_impact",
    "global_reach",
    "capital_expenditure",
    "beta",
    "kpi",
    "volatility",
)


def normalize_metrics(universe: Sequence[MetricVector]) -> list[MetricVector]:
    """Min-max rescale each metric across the universe to [0, 1].

    Beta is transformed to |beta - 1| before rescaling, since the composite
    rewards distance from the industry-average cyclicality. A metric that is
    constant across the universe maps to 0.5 for every company.
    """
    if len(universe) < 2:
        raise ValueError("need at least 2 companies to normalize metrics")
    columns: dict[str, np.ndarray] = {}
    for field in _METRIC_FIELDS:
        raw = np.array([getattr(m, field) for m in universe])
        if field == "beta":
            raw = np.abs(raw - 1.0)
        span = raw.max() - raw.min()
        if span == 0.0:
            columns[field] = np.full(len(universe), 0.5)
        else:
            columns[field] = (raw - raw.min()) / span
    return [
        MetricVector(**{field: float(columns[field][i]) for field in _METRIC_FIELDS})
        for i in range(len(universe))
    ]


def selection_score(metrics: MetricVector, weights: SelectionWeights) -> float:
    """Weighted sum of the six normalized metrics; lies in [0, 1] for normalized input."""
    w = weights.as_tuple()
    m = (
        metrics.economic_impact,
        metrics.global_reach,
        metrics.capital_expenditure,
        metrics.beta,
        metrics.kpi,
        metrics.volatility,
    )
    return float(sum(wi * mi for wi, mi in zip(w, m)))


def rank_universe(scores: Sequence[tuple[str, float]], k: int) -> list[str]:
    """Top-k tickers by descending score; ties broken by ascending ticker."""
    if k > len(scores):
        raise ValueError(f"k={k} exceeds universe size {len(scores)}")
    if k < 0:
        raise ValueError("k must be nonnegative")
    ordered = sorted(scores, key=lambda item: (-item[1], item[0]))
    return [ticker for ticker, _ in ordered[:k]]


def load_metrics_csv(path: str | Path) -> dict[str, dict[str, float]]:
    """Read the fundamentals file (ticker, market_cap, intl_sales, total_sales, capex, kpi).

    Returns per-ticker raw metric values; beta and volatility are computed
    from price data elsewhere. global_reach is intl_sales / total_sales.
    """
    path = Path(path)
    required = ("ticker", "market_cap", "intl_sales", "total_sales", "capex", "kpi")
    out: dict[str, dict[str, float]] = {}
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: missing header row")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        for row in reader:
            line = reader.line_num
            ticker = row["ticker"].strip()
            if not ticker:
                raise ValueError(f"{path}: line {line}: empty ticker")
            if ticker in out:
                raise ValueError(f"{path}: line {line}: duplicate ticker {ticker!r}")
            try:
                market_cap = float(row["market_cap"])
                intl = float(row["intl_sales"])
                total = float(row["total_sales"])
                capex = float(row["capex"])
                kpi = float(row["kpi"])
            except ValueError:
                raise ValueError(f"{path}: line {line}: unparseable numeric field") from None
            if total <= 0:
                raise ValueError(f"{path}: line {line}: total_sales must be positive")
            reach = intl / total
            if not 0.0 <= reach <= 1.0:
                raise ValueError(
                    f"{path}: line {line}: intl_sales/total_sales = {reach} outside [0, 1]"
                )
            out[ticker] = {
                "economic_impact": market_cap,
                "global_reach": reach,
                "capital_expenditure": capex,
                "kpi": kpi,
            }
    if not out:
        raise ValueError(f"{path}: no data rows")
    return out
