"""Price series loading, transformation, and simulation.

All randomised operations are driven by numpy's PCG64 generator seeded
from explicit integers, so replicates are reproducible and can be farmed
out to independent workers in any order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np
from scipy.signal import lfilter


class SeriesError(ValueError):
    """Raised for malformed or unusable price series inputs."""


@dataclass(frozen=True)
class PriceSeries:
    """Ordered price observations after inactive-entry removal."""

    prices: np.ndarray
    timestamps: np.ndarray | None = None
    series_id: str = "series"

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "prices", prices)
        if len(prices) < 2:
            raise SeriesError("price series needs at least 2 observations")
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype=float)
            if len(ts) != len(prices):
                raise SeriesError("timestamps and prices differ in length")
            if np.any(np.diff(ts) <= 0):
                raise SeriesError("timestamps must be strictly increasing")
            object.__setattr__(self, "timestamps", ts)

    def __len__(self) -> int:
        return len(self.prices)


@dataclass(frozen=True)
class ShuffleSpec:
    """Identifies one shuffled-returns replicate; same (seed, replicate_index)
    always yields the identical permutation."""

    seed: int
    replicate_index: int = 0

    def rng(self) -> np.random.Generator:
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([self.seed, self.replicate_index]))
        )


@dataclass(frozen=True)
class Ar1Spec:
    """Parameters for an AR(1) simulation x_t = rho * x_{t-1} + noise."""

    rho: float
    length: int
    noise_sd: float = 1.0
    initial_value: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.length < 2:
            raise SeriesError("AR(1) length must be >= 2")
        if self.noise_sd < 0:
            raise SeriesError("noise_sd must be non-negative")


def _parse_time(raw: str, line_no: int) -> float:
    try:
        return float(raw)
    except ValueError:
        pass
    try:
        # wall-clock timestamps are mapped to epoch minutes
        return datetime.fromisoformat(raw).timestamp() / 60.0
    except ValueError:
        raise SeriesError(f"line {line_no}: unparseable timestamp {raw!r}") from None


def load_series(
    path: str | Path,
    column_map: dict[str, str] | None = None,
    series_id: str | None = None,
) -> PriceSeries:
    """Load a price series from CSV.

    The native schema is a header row with ``timestamp,price`` columns.
    ``column_map`` maps the native names to third-party column names, e.g.
    ``{"price": "close", "volume": "vol"}`` for OHLC exports.  If a volume
    column is mapped, rows with zero volume are treated as inactive and
    dropped.  Rows are sorted by timestamp if out of order.
    """
    path = Path(path)
    if not path.exists():
        raise SeriesError(f"no such file: {path}")
    column_map = column_map or {}
    ts_col = column_map.get("timestamp", "timestamp")
    price_col = column_map.get("price", "price")
    vol_col = column_map.get("volume")

    rows: list[tuple[float, float]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or price_col not in reader.fieldnames:
            raise SeriesError(f"missing price column {price_col!r} in {path}")
        has_ts = ts_col in reader.fieldnames
        for line_no, row in enumerate(reader, start=2):
            raw_price = (row.get(price_col) or "").strip()
            if vol_col is not None:
                raw_vol = (row.get(vol_col) or "").strip()
                try:
                    vol = float(raw_vol)
                except ValueError:
                    raise SeriesError(
                        f"line {line_no}: unparseable volume {raw_vol!r}"
                    ) from None
                if vol == 0:
                    continue  # inactive entry: no trading activity
            try:
                price = float(raw_price)
            except ValueError:
                raise SeriesError(
                    f"line {line_no}: unparseable price {raw_price!r}"
                ) from None
            ts = _parse_time(row[ts_col].strip(), line_no) if has_ts else float(len(rows))
            rows.append((ts, price))

    if len(rows) < 2:
        raise SeriesError(f"{path}: fewer than 2 valid rows")
    rows.sort(key=lambda r: r[0])
    ts_arr = np.array([r[0] for r in rows])
    px_arr = np.array([r[1] for r in rows])
    return PriceSeries(px_arr, ts_arr, series_id or path.stem)


def save_series(series: PriceSeries, path: str | Path) -> None:
    """Write a series in the native ``timestamp,price`` CSV schema."""
    path = Path(path)
    ts = (
        series.timestamps
        if series.timestamps is not None
        else np.arange(len(series), dtype=float)
    )
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "price"])
        for t, p in zip(ts, series.prices):
            writer.writerow([repr(float(t)), repr(float(p))])


def mean_abs_increment(series: PriceSeries) -> float:
    """Average absolute one-step price increment over the whole series."""
    if len(series) < 2:
        raise SeriesError("need at least 2 prices for an increment")
    return float(np.mean(np.abs(np.diff(series.prices))))


def shuffle_returns(series: PriceSeries, spec: ShuffleSpec) -> PriceSeries:
    """Surrogate series built by permuting first differences.

    Destroys temporal ordering of increments while preserving their
    distribution; reconstruction starts from the original first price.
    """
    if len(series) < 2:
        raise SeriesError("need at least 2 prices to shuffle returns")
    diffs = np.diff(series.prices)
    perm = spec.rng().permutation(len(diffs))
    out = np.empty(len(series))
    out[0] = series.prices[0]
    np.cumsum(diffs[perm], out=out[1:])
    out[1:] += out[0]
    return PriceSeries(
        out,
        None,
        f"{series.series_id}_shuffle{spec.replicate_index}",
    )


def simulate_ar1(spec: Ar1Spec) -> PriceSeries:
    """Simulate x_t = rho * x_{t-1} + eps_t with eps_t ~ N(0, noise_sd^2)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([spec.seed])))
    drive = np.empty(spec.length)
    drive[0] = spec.initial_value
    if spec.noise_sd > 0:
        drive[1:] = rng.normal(0.0, spec.noise_sd, spec.length - 1)
    else:
        drive[1:] = 0.0
    out = lfilter([1.0], [1.0, -spec.rho], drive)
    return PriceSeries(np.asarray(out), None, f"ar1_rho{spec.rho:g}")
