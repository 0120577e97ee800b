"""Price ingestion, percent log-returns, and the running statistics
(recursive variance, sample kurtosis) every other module consumes.

Conventions, fixed once here:

* ``Y_t = 100 * ln(X_{t+1} / X_t)`` -- percent log-returns.
* ``running_variance(y, upto=t)`` is the variance estimate available *at*
  time ``t``: the first ``t - 1`` observations, centered on their own mean,
  divided by ``t - 1`` (window-length divisor, not ``n - 1``).
* Kurtosis is the plain moment ratio ``m4 / m2**2``, no bias correction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class PriceSeries:
    """A positive price series with opaque timestamp labels."""

    prices: np.ndarray
    timestamps: tuple[str, ...] = ()

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "prices", prices)
        if prices.ndim != 1 or prices.size < 2:
            raise DataError(f"fewer than 2 prices (got {prices.size})")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0.0):
            raise DataError("prices must be finite and strictly positive")
        if self.timestamps and len(self.timestamps) != prices.size:
            raise DataError("timestamps and prices differ in length")

    def __len__(self) -> int:
        return self.prices.size


@dataclass(frozen=True)
class ReturnSeries:
    """Percent log-returns, the universal input of the forecasting pipeline."""

    values: np.ndarray = field()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size == 0:
            raise DataError("return series must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(values)):
            raise DataError("return series contains non-finite values")

    def __len__(self) -> int:
        return self.values.size


def load_price_csv(path, column: str = "close") -> PriceSeries:
    """Read a price series from a headered CSV file.

    Rows with unparseable or nonpositive prices are rejected outright (the
    error names the offending row), never silently skipped.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open price file {path!r}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise DataError(
                f"column {column!r} not found in {path!r} "
                f"(columns: {reader.fieldnames})"
            )
        tskey = None
        for cand in ("timestamp", "date", "time", "index"):
            if cand in reader.fieldnames:
                tskey = cand
                break
        prices: list[float] = []
        stamps: list[str] = []
        for i, row in enumerate(reader, start=2):  # row 1 is the header
            raw = (row.get(column) or "").strip()
            try:
                value = float(raw)
            except ValueError:
                raise DataError(f"row {i}: price {raw!r} is not numeric") from None
            if not math.isfinite(value) or value <= 0.0:
                raise DataError(f"row {i}: price {raw!r} is not strictly positive")
            prices.append(value)
            stamps.append((row.get(tskey) or str(i - 2)) if tskey else str(i - 2))
    if len(prices) < 2:
        raise DataError(f"fewer than 2 prices in {path!r}")
    return PriceSeries(np.asarray(prices), tuple(stamps))


def load_returns_csv(path, column: str = "return") -> ReturnSeries:
    """Read an already-computed return series from a headered CSV file."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open returns file {path!r}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise DataError(
                f"column {column!r} not found in {path!r} "
                f"(columns: {reader.fieldnames})"
            )
        values: list[float] = []
        for i, row in enumerate(reader, start=2):
            raw = (row.get(column) or "").strip()
            try:
                values.append(float(raw))
            except ValueError:
                raise DataError(f"row {i}: return {raw!r} is not numeric") from None
    if not values:
        raise DataError(f"no returns in {path!r}")
    return ReturnSeries(np.asarray(values))


def to_log_returns(p: PriceSeries) -> ReturnSeries:
    """Percent log-returns: ``values[t] = 100 * ln(prices[t+1] / prices[t])``."""
    if len(p) < 2:
        raise DataError("need at least 2 prices to form returns")
    return ReturnSeries(100.0 * np.diff(np.log(p.prices)))


def running_variance(y: ReturnSeries, upto: int) -> float:
    """Variance estimate available at time ``upto``.

    Mean-centered second moment of the first ``upto - 1`` observations with
    divisor ``upto - 1``. A single observation gives 0 by convention.
    """
    if upto < 2:
        raise DataError(f"running variance undefined for upto={upto} (< 2)")
    window = np.asarray(y.values, dtype=float)[: upto - 1]
    if window.size < upto - 1:
        raise DataError(
            f"upto={upto} needs {upto - 1} observations, series has {len(y)}"
        )
    return float(np.var(window))


def variance_path(values: np.ndarray) -> np.ndarray:
    """``out[t] = var(values[:t])`` (divisor ``t``) for ``t = 0..n``.

    ``out[t]`` is the paper-convention ``s^2`` available at time ``t + 1``;
    ``out[0]`` and ``out[1]`` are 0. Computed two-pass per prefix for the
    same numerical behavior as :func:`running_variance`.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    out = np.zeros(n + 1)
    for t in range(2, n + 1):
        out[t] = np.var(values[:t])
    return out


@dataclass(frozen=True)
class RunningStats:
    """The recursive variance estimates of a return series.

    ``s2[t]`` is computed from exactly the first ``t`` observations;
    ``mean_basis`` is the full-sample mean the final estimate centers on.
    """

    s2: np.ndarray
    mean_basis: float

    def __post_init__(self):
        s2 = np.asarray(self.s2, dtype=float)
        object.__setattr__(self, "s2", s2)
        if np.any(s2 < 0.0):
            raise DataError("variance estimates cannot be negative")


def running_stats(y: ReturnSeries) -> RunningStats:
    return RunningStats(variance_path(y.values), float(y.values.mean()))


def sample_kurtosis(w) -> float:
    """Moment-ratio kurtosis ``m4 / m2**2`` (3 for a normal distribution)."""
    w = np.asarray(w, dtype=float)
    if w.size < 4:
        raise DataError(f"kurtosis needs at least 4 observations, got {w.size}")
    centered = w - w.mean()
    m2 = float(np.mean(centered**2))
    if m2 <= 0.0:
        raise DataError("kurtosis undefined for a constant sequence")
    m4 = float(np.mean(centered**4))
    return m4 / (m2 * m2)
