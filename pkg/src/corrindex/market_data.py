"""Daily price ingestion, calendar alignment, returns, and synthetic panels."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# Yahoo-style header set accepted out of the box; override per file via `schema`.
DEFAULT_SCHEMA = {
    "date": "Date",
    "close": "Close",
    "adjusted_close": "Adj Close",
    "dividend": "Dividends",
}

RETURN_MODES = ("simple_with_dividends", "simple_price_only")
ALIGN_POLICIES = ("intersect", "forward_fill")
PRICE_FIELDS = ("adjusted_close", "close")


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, slots=True)
class PriceBar:
    """One daily observation: close, adjusted close, and cash dividend per share."""

    date: date
    close: float
    adjusted_close: float
    dividend: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.close) and self.close > 0):
            raise ValueError(f"close must be finite and positive, got {self.close!r}")
        if not (np.isfinite(self.adjusted_close) and self.adjusted_close > 0):
            raise ValueError(
                f"adjusted_close must be finite and positive, got {self.adjusted_close!r}"
            )
        if not (np.isfinite(self.dividend) and self.dividend >= 0):
            raise ValueError(f"dividend must be finite and nonnegative, got {self.dividend!r}")


@dataclass(frozen=True)
class PriceSeries:
    """Date-ordered daily bars for one ticker (at least two, strictly increasing dates)."""

    ticker: str
    bars: tuple[PriceBar, ...]

    def __post_init__(self):
        object.__setattr__(self, "bars", tuple(self.bars))
        if len(self.bars) < 2:
            raise ValueError(f"{self.ticker}: need at least 2 bars, got {len(self.bars)}")
        for prev, cur in zip(self.bars, self.bars[1:]):
            if cur.date <= prev.date:
                raise ValueError(
                    f"{self.ticker}: dates must be strictly increasing "
                    f"({prev.date} then {cur.date})"
                )

    @property
    def dates(self) -> tuple[date, ...]:
        return tuple(bar.date for bar in self.bars)

    def prices(self, field: str = "adjusted_close") -> np.ndarray:
        if field not in PRICE_FIELDS:
            raise ValueError(f"unknown price field {field!r}, expected one of {PRICE_FIELDS}")
        return np.array([getattr(bar, field) for bar in self.bars])

    def dividends(self) -> np.ndarray:
        return np.array([bar.dividend for bar in self.bars])


@dataclass(frozen=True)
class ReturnSeries:
    """Daily simple returns; each value is labelled by the end date of its period."""

    ticker: str
    dates: tuple[date, ...]
    returns: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "returns", _readonly(self.returns))
        if self.returns.ndim != 1 or len(self.dates) != self.returns.shape[0]:
            raise ValueError(f"{self.ticker}: dates and returns lengths differ")
        if not np.all(np.isfinite(self.returns)):
            raise ValueError(f"{self.ticker}: returns contain non-finite values")

    def __len__(self) -> int:
        return self.returns.shape[0]


@dataclass(frozen=True)
class AlignedPanel:
    """Dense date-by-ticker matrix of values sharing one calendar."""

    tickers: tuple[str, ...]
    dates: tuple[date, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "values", _readonly(self.values))
        if self.values.shape != (len(self.dates), len(self.tickers)):
            raise ValueError(
                f"panel shape {self.values.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("panel contains non-finite values")

    @property
    def n_assets(self) -> int:
        return len(self.tickers)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    def column(self, ticker: str) -> np.ndarray:
        try:
            idx = self.tickers.index(ticker)
        except ValueError:
            raise KeyError(f"ticker {ticker!r} not in panel") from None
        return self.values[:, idx]


def load_price_csv(
    path: str | Path,
    schema: dict[str, str] | None = None,
    ticker: str | None = None,
) -> PriceSeries:
    """Load one ticker's daily bars from a CSV file.

    The default schema expects Yahoo-style headers (Date, Close, Adj Close,
    Dividends); pass `schema` to remap. A missing dividend column means
    dividend 0; a missing adjusted-close column falls back to close.
    Malformed rows raise with the 1-based line number.
    """
    path = Path(path)
    colmap = dict(DEFAULT_SCHEMA)
    if schema:
        colmap.update(schema)
    name = ticker if ticker is not None else path.stem

    bars: list[PriceBar] = []
    seen: set[date] = set()
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: missing header row")
        for key in ("date", "close"):
            if colmap[key] not in reader.fieldnames:
                raise ValueError(f"{path}: required column {colmap[key]!r} not in header")
        has_adj = colmap["adjusted_close"] in reader.fieldnames
        has_div = colmap["dividend"] in reader.fieldnames
        for row in reader:
            line = reader.line_num
            try:
                day = date.fromisoformat(row[colmap["date"]].strip())
            except ValueError:
                raise ValueError(
                    f"{path}: line {line}: unparseable date {row[colmap['date']]!r}"
                ) from None
            if day in seen:
                raise ValueError(f"{path}: line {line}: duplicate date {day}")
            seen.add(day)
            close = _parse_float(row[colmap["close"]], path, line, "close")
            if close <= 0:
                raise ValueError(f"{path}: line {line}: non-positive close {close}")
            adj = close
            if has_adj and row[colmap["adjusted_close"]].strip() != "":
                adj = _parse_float(row[colmap["adjusted_close"]], path, line, "adjusted close")
                if adj <= 0:
                    raise ValueError(f"{path}: line {line}: non-positive adjusted close {adj}")
            div = 0.0
            if has_div and row[colmap["dividend"]].strip() != "":
                div = _parse_float(row[colmap["dividend"]], path, line, "dividend")
            bars.append(PriceBar(date=day, close=close, adjusted_close=adj, dividend=div))
    bars.sort(key=lambda bar: bar.date)
    return PriceSeries(ticker=name, bars=tuple(bars))


def _parse_float(raw: str, path: Path, line: int, what: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{path}: line {line}: unparseable {what} {raw!r}") from None


def compute_returns(
    series: PriceSeries,
    mode: str = "simple_with_dividends",
    price_field: str = "adjusted_close",
) -> ReturnSeries:
    """Per-day simple return (end - begin + dividend) / begin.

    `simple_price_only` drops the dividend term; useful for factor series
    (yield indexes, futures) that pay none.
    """
    if mode not in RETURN_MODES:
        raise ValueError(f"unknown return mode {mode!r}, expected one of {RETURN_MODES}")
    if len(series.bars) < 2:
        raise ValueError(f"{series.ticker}: need at least 2 bars to compute returns")
    prices = series.prices(price_field)
    rets = (prices[1:] - prices[:-1]) / prices[:-1]
    if mode == "simple_with_dividends":
        rets = rets + series.dividends()[1:] / prices[:-1]
    return ReturnSeries(ticker=series.ticker, dates=series.dates[1:], returns=rets)


def align_calendars(
    series: Sequence[PriceSeries | ReturnSeries],
    policy: str = "intersect",
    price_field: str = "adjusted_close",
) -> AlignedPanel:
    """Put several series on one calendar.

    `intersect` keeps only dates present in every series. `forward_fill`
    uses the union of dates, carries each series' last value forward, and
    drops union dates that precede any series' first observation.
    """
    if policy not in ALIGN_POLICIES:
        raise ValueError(f"unknown policy {policy!r}, expected one of {ALIGN_POLICIES}")
    if not series:
        raise ValueError("need at least one series to align")

    tickers: list[str] = []
    maps: list[dict[date, float]] = []
    for item in series:
        if isinstance(item, PriceSeries):
            values = item.prices(price_field)
            dates = item.dates
        else:
            values = item.returns
            dates = item.dates
        tickers.append(item.ticker)
        maps.append(dict(zip(dates, values)))

    if policy == "intersect":
        common = set(maps[0])
        for m in maps[1:]:
            common &= set(m)
        if not common:
            raise ValueError("calendar intersection is empty")
        out_dates = sorted(common)
        matrix = np.array([[m[d] for m in maps] for d in out_dates])
        return AlignedPanel(tickers=tuple(tickers), dates=tuple(out_dates), values=matrix)

    union: set[date] = set()
    for m in maps:
        union |= set(m)
    first_common = max(min(m) for m in maps)
    out_dates = sorted(d for d in union if d >= first_common)
    matrix = np.empty((len(out_dates), len(maps)))
    for j, m in enumerate(maps):
        known = sorted(m)
        pos = 0
        last = m[known[0]]
        for i, d in enumerate(out_dates):
            while pos < len(known) and known[pos] <= d:
                last = m[known[pos]]
                pos += 1
            matrix[i, j] = last
    return AlignedPanel(tickers=tuple(tickers), dates=tuple(out_dates), values=matrix)


def generate_synthetic_panel(
    n_assets: int,
    n_days: int,
    block_sizes: Sequence[int] | None = None,
    intra_corr: float = 0.0,
    inter_corr: float = 0.0,
    daily_vol: float | Sequence[float] = 0.01,
    seed: int = 0,
    start: date = date(2008, 1, 2),
) -> AlignedPanel:
    """Gaussian return panel whose target correlation has a block structure.

    Assets inside a block share `intra_corr`; assets in different blocks share
    `inter_corr`. The target matrix must be positive definite (checked before
    sampling). Deterministic per (parameters, seed).
    """
    if n_assets < 1 or n_days < 1:
        raise ValueError("n_assets and n_days must be positive")
    if block_sizes is None:
        block_sizes = [n_assets]
    if sum(block_sizes) != n_assets or any(b < 1 for b in block_sizes):
        raise ValueError(f"block sizes {list(block_sizes)} do not partition {n_assets} assets")

    labels = np.repeat(np.arange(len(block_sizes)), block_sizes)
    target = np.where(labels[:, None] == labels[None, :], intra_corr, inter_corr)
    np.fill_diagonal(target, 1.0)
    try:
        chol = np.linalg.cholesky(target)
    except np.linalg.LinAlgError:
        raise ValueError("target correlation matrix is not positive definite") from None

    vol = np.broadcast_to(np.asarray(daily_vol, dtype=float), (n_assets,))
    if np.any(vol <= 0):
        raise ValueError("daily_vol must be positive")
    rng = np.random.default_rng(seed)
    shocks = rng.standard_normal((n_days, n_assets))
    values = (shocks @ chol.T) * vol

    tickers = tuple(f"A{i:03d}" for i in range(n_assets))
    return AlignedPanel(tickers=tickers, dates=tuple(_weekdays(start, n_days)), values=values)


def _weekdays(start: date, count: int) -> Iterable[date]:
    day = start
    produced = 0
    while produced < count:
        if day.weekday() < 5:
            yield day
            produced += 1
        day += timedelta(days=1)


def panel_to_csv(panel: AlignedPanel, path: str | Path) -> None:
    """Write a panel as CSV: date column, then one column per ticker."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["date", *panel.tickers])
        for i, day in enumerate(panel.dates):
            writer.writerow([day.isoformat(), *(repr(float(v)) for v in panel.values[i])])


def panel_from_csv(path: str | Path) -> AlignedPanel:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header or header[0] != "date":
            raise ValueError(f"{path}: expected a 'date' header column")
        tickers = tuple(header[1:])
        dates: list[date] = []
        rows: list[list[float]] = []
        for row in reader:
            dates.append(date.fromisoformat(row[0]))
            rows.append([float(v) for v in row[1:]])
    return AlignedPanel(tickers=tickers, dates=tuple(dates), values=np.array(rows))
