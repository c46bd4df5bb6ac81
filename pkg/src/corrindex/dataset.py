"""Supervised dataset assembly: scaling, windowing, and chronological splits.

The one-feature variant uses the index return history alone; the factor
variant appends the index/ETF factor columns, so a six-index, five-ETF factor
set yields twelve features. Scaling is min-max to [0, 1], fit strictly on the
rows visible to the training samples; out-of-range test values are left
unclipped so error metrics stay honest.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .market_data import PriceSeries, ReturnSeries, align_calendars


class Scaler:
    """Per-feature min-max state. Constant features transform to 0.5."""

    def __init__(self):
        self.feature_min: np.ndarray | None = None
        self.feature_max: np.ndarray | None = None

    @property
    def is_fit(self) -> bool:
        return self.feature_min is not None

    def _span(self) -> np.ndarray:
        return self.feature_max - self.feature_min

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        if not self.is_fit:
            raise ValueError("scaler used before fitting")
        x = np.asarray(matrix, dtype=float)
        span = self._span()
        safe = np.where(span == 0, 1.0, span)
        out = (x - self.feature_min) / safe
        return np.where(span == 0, 0.5, out)

    def inverse(self, matrix: np.ndarray) -> np.ndarray:
        if not self.is_fit:
            raise ValueError("scaler used before fitting")
        x = np.asarray(matrix, dtype=float)
        span = self._span()
        out = x * span + self.feature_min
        return np.where(span == 0, self.feature_min, out)

    def transform_feature(self, values: np.ndarray, feature: int) -> np.ndarray:
        if not self.is_fit:
            raise ValueError("scaler used before fitting")
        span = float(self.feature_max[feature] - self.feature_min[feature])
        if span == 0:
            return np.full_like(np.asarray(values, dtype=float), 0.5)
        return (np.asarray(values, dtype=float) - self.feature_min[feature]) / span

    def inverse_feature(self, values: np.ndarray, feature: int) -> np.ndarray:
        if not self.is_fit:
            raise ValueError("scaler used before fitting")
        span = float(self.feature_max[feature] - self.feature_min[feature])
        if span == 0:
            return np.full_like(np.asarray(values, dtype=float), self.feature_min[feature])
        return np.asarray(values, dtype=float) * span + self.feature_min[feature]


def fit_scaler(train_matrix: np.ndarray) -> Scaler:
    """Fit per-feature min/max on the given rows only."""
    x = np.asarray(train_matrix, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("fit matrix contains non-finite values")
    scaler = Scaler()
    scaler.feature_min = x.min(axis=0)
    scaler.feature_max = x.max(axis=0)
    return scaler


def transform(scaler: Scaler, matrix: np.ndarray) -> np.ndarray:
    return scaler.transform(matrix)


def inverse_transform(scaler: Scaler, matrix: np.ndarray) -> np.ndarray:
    return scaler.inverse(matrix)


@dataclass(frozen=True)
class WindowedDataset:
    """Supervised samples: X is samples x lookback x features, y the next-step target."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    scaler: Scaler | None = None
    target_feature: int = 0

    def __post_init__(self):
        x = np.array(self.X, dtype=float)
        x.setflags(write=False)
        object.__setattr__(self, "X", x)
        yv = np.array(self.y, dtype=float)
        yv.setflags(write=False)
        object.__setattr__(self, "y", yv)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.X.ndim != 3:
            raise ValueError(f"X must be 3-D, got shape {self.X.shape}")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y sample counts differ")
        if self.X.shape[2] != len(self.feature_names):
            raise ValueError("feature_names length does not match X")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("dataset contains non-finite values")
        if not 0 <= self.target_feature < self.X.shape[2]:
            raise ValueError(f"target feature {self.target_feature} out of range")

    @property
    def sample_count(self) -> int:
        return self.X.shape[0]

    @property
    def lookback(self) -> int:
        return self.X.shape[1]

    @property
    def feature_count(self) -> int:
        return self.X.shape[2]


def make_windows(
    matrix: np.ndarray,
    lookback: int,
    target_feature: int = 0,
    feature_names: Sequence[str] | None = None,
) -> WindowedDataset:
    """Sliding windows: X[s] = rows s..s+lookback-1, y[s] = target at row s+lookback."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim == 1:
        m = m[:, None]
    if lookback < 1:
        raise ValueError("lookback must be positive")
    length = m.shape[0]
    if length <= lookback:
        raise ValueError(f"series length {length} must exceed lookback {lookback}")
    if not 0 <= target_feature < m.shape[1]:
        raise ValueError(f"target feature {target_feature} out of range")
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(m.shape[1]))
    samples = length - lookback
    x = np.stack([m[s : s + lookback] for s in range(samples)])
    y = m[lookback:, target_feature].copy()
    return WindowedDataset(
        X=x, y=y, feature_names=tuple(feature_names), scaler=None, target_feature=target_feature
    )


def chronological_split(
    ds: WindowedDataset, train_fraction: float
) -> tuple[WindowedDataset, WindowedDataset]:
    """First floor(fraction * N) samples train, remainder test, no shuffling.

    The scaler is fit on the rows the training samples expose (their X
    windows) and applied to both splits, so no test information leaks into
    the scaling. Scaled test values may fall outside [0, 1].
    """
    if ds.scaler is not None:
        raise ValueError("dataset is already scaled; split the unscaled dataset")
    n = ds.sample_count
    n_train = math.floor(train_fraction * n)
    if n_train < 1 or n_train >= n:
        raise ValueError(
            f"train fraction {train_fraction} gives empty split ({n_train}/{n - n_train})"
        )
    scaler = fit_scaler(ds.X[:n_train].reshape(-1, ds.feature_count))

    def scaled(x_part: np.ndarray, y_part: np.ndarray) -> WindowedDataset:
        x_flat = scaler.transform(x_part.reshape(-1, ds.feature_count))
        return WindowedDataset(
            X=x_flat.reshape(x_part.shape),
            y=scaler.transform_feature(y_part, ds.target_feature),
            feature_names=ds.feature_names,
            scaler=scaler,
            target_feature=ds.target_feature,
        )

    train = scaled(ds.X[:n_train], ds.y[:n_train])
    test = scaled(ds.X[n_train:], ds.y[n_train:])
    return train, test


def feature_matrix(
    index_returns: ReturnSeries,
    factors: Sequence[ReturnSeries | PriceSeries] = (),
    policy: str = "forward_fill",
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Stack the index series (column 0) with factor series on one calendar.

    Factors may be return series or price series; passing price series keeps
    them as levels. Forward-fill alignment preserves the index's length on
    mixed holiday calendars.
    """
    if not factors:
        return index_returns.returns[:, None].copy(), (index_returns.ticker,)
    panel = align_calendars([index_returns, *factors], policy=policy)
    return panel.values.copy(), panel.tickers


def save_windows_csv(ds: WindowedDataset, path: str | Path) -> None:
    """Flatten samples to CSV rows (sample, lag, features..., target).

    Values are written with repr so the loader reproduces them bit-exactly.
    Scaler state is not persisted; exports are of the samples themselves.
    """
    reserved = {"sample", "lag", "target"}
    if reserved & set(ds.feature_names):
        raise ValueError(f"feature names collide with reserved columns {sorted(reserved)}")
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["sample", "lag", *ds.feature_names, "target"])
        for s in range(ds.sample_count):
            for lag in range(ds.lookback):
                writer.writerow(
                    [s, lag, *(repr(float(v)) for v in ds.X[s, lag]), repr(float(ds.y[s]))]
                )


def load_windows_csv(path: str | Path, target_feature: int = 0) -> WindowedDataset:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or header[:2] != ["sample", "lag"] or header[-1] != "target":
            raise ValueError(f"{path}: malformed windowed-dataset header")
        feature_names = tuple(header[2:-1])
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no samples")
    samples = int(rows[-1][0]) + 1
    lookback = int(rows[-1][1]) + 1
    if len(rows) != samples * lookback:
        raise ValueError(f"{path}: expected {samples * lookback} rows, got {len(rows)}")
    x = np.empty((samples, lookback, len(feature_names)))
    y = np.empty(samples)
    for row in rows:
        s, lag = int(row[0]), int(row[1])
        x[s, lag] = [float(v) for v in row[2:-1]]
        y[s] = float(row[-1])
    return WindowedDataset(
        X=x, y=y, feature_names=feature_names, scaler=None, target_feature=target_feature
    )
