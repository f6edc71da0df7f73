"""Daily OHLCV bars: CSV ingestion, synthetic generators and chronological splits."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DataError

PRICE_FIELDS = ("open", "high", "low", "close", "adj_close")
REQUIRED_COLUMNS = ("date", "open", "high", "low", "close", "volume")


@dataclass(frozen=True, eq=False)
class BarSeries:
    """Immutable daily bar history.

    Rows are consecutive trading days; calendar gaps are allowed and ignored.
    Arrays are stored read-only.
    """

    dates: np.ndarray
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    adj_close: np.ndarray
    volume: np.ndarray

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        object.__setattr__(self, "dates", dates)
        for name in PRICE_FIELDS + ("volume",):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != dates.shape:
                raise DataError(f"{name} has shape {arr.shape}, expected {dates.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        dates.setflags(write=False)
        _check_invariants(self)

    def __len__(self) -> int:
        return len(self.dates)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BarSeries):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("dates",) + PRICE_FIELDS + ("volume",)
        )

    def __getitem__(self, key: slice) -> "BarSeries":
        if not isinstance(key, slice):
            raise TypeError("BarSeries supports slice indexing only")
        return BarSeries(
            **{f: getattr(self, f)[key] for f in ("dates",) + PRICE_FIELDS + ("volume",)}
        )

    @property
    def has_volume(self) -> bool:
        """False when every volume entry is zero (no usable volume data)."""
        return bool(np.any(self.volume > 0))


def _check_invariants(bars: BarSeries) -> None:
    n = len(bars.dates)
    if n < 1:
        raise DataError("bar series is empty")
    if n > 1:
        steps = np.diff(bars.dates).astype(np.int64)
        if np.any(steps <= 0):
            i = int(np.argmax(steps <= 0)) + 1
            raise DataError(f"dates not strictly increasing at row {i} ({bars.dates[i]})")
    for name in PRICE_FIELDS:
        arr = getattr(bars, name)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            i = int(np.argmax(~(np.isfinite(arr) & (arr > 0))))
            raise DataError(f"{name} must be finite and positive (row {i})")
    if not np.all(np.isfinite(bars.volume)) or np.any(bars.volume < 0):
        i = int(np.argmax(~(np.isfinite(bars.volume) & (bars.volume >= 0))))
        raise DataError(f"volume must be finite and non-negative (row {i})")
    bad = (bars.low > np.minimum(bars.open, bars.close)) | (
        bars.high < np.maximum(bars.open, bars.close)
    )
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DataError(f"high/low bound violated at row {i} ({bars.dates[i]})")


def parse_ohlcv_csv(text: str | io.TextIOBase) -> BarSeries:
    """Parse a header-led CSV of daily bars.

    Columns are matched case-insensitively and may come in any order. A
    missing ``adj_close`` column falls back to ``close`` with a warning.
    Rows are sorted by date; error messages carry the 1-based file line.
    """
    if isinstance(text, str):
        text = io.StringIO(text)
    reader = csv.reader(text)
    header = None
    for row in reader:
        if any(cell.strip() for cell in row):
            header = [cell.strip().lower() for cell in row]
            break
    if header is None:
        raise DataError("empty CSV: no header row")
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise DataError(f"CSV header missing column(s): {', '.join(missing)}")
    has_adj = "adj_close" in header
    if not has_adj:
        warnings.warn("adj_close column absent; using close", stacklevel=2)
    idx = {name: header.index(name) for name in header}

    records = []
    seen: dict[np.datetime64, int] = {}
    for row in reader:
        line = reader.line_num
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DataError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        try:
            date = np.datetime64(row[idx["date"]].strip(), "D")
            vals = {c: float(row[idx[c]]) for c in ("open", "high", "low", "close", "volume")}
            vals["adj_close"] = float(row[idx["adj_close"]]) if has_adj else vals["close"]
        except ValueError as exc:
            raise DataError(f"line {line}: malformed row ({exc})") from None
        if date in seen:
            raise DataError(f"line {line}: duplicate date {date} (first seen on line {seen[date]})")
        seen[date] = line
        for c in PRICE_FIELDS:
            if not (math.isfinite(vals[c]) and vals[c] > 0):
                raise DataError(f"line {line}: {c} must be positive, got {vals[c]}")
        if not (math.isfinite(vals["volume"]) and vals["volume"] >= 0):
            raise DataError(f"line {line}: volume must be non-negative, got {vals['volume']}")
        if vals["low"] > min(vals["open"], vals["close"]):
            raise DataError(f"line {line}: low {vals['low']} above min(open, close)")
        if vals["high"] < max(vals["open"], vals["close"]):
            raise DataError(f"line {line}: high {vals['high']} below max(open, close)")
        records.append((date, vals))

    if not records:
        raise DataError("CSV contains a header but no data rows")
    records.sort(key=lambda r: r[0])
    return BarSeries(
        dates=np.array([r[0] for r in records], dtype="datetime64[D]"),
        **{c: np.array([r[1][c] for r in records]) for c in PRICE_FIELDS + ("volume",)},
    )


def read_ohlcv_csv(path) -> BarSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_ohlcv_csv(fh)


def render_ohlcv_csv(bars: BarSeries) -> str:
    """Inverse of :func:`parse_ohlcv_csv`; floats use ``repr`` so the round trip is exact."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["date", "open", "high", "low", "close", "adj_close", "volume"])
    for i in range(len(bars)):
        writer.writerow(
            [str(bars.dates[i])]
            + [repr(float(getattr(bars, c)[i])) for c in PRICE_FIELDS]
            + [repr(float(bars.volume[i]))]
        )
    return out.getvalue()


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for :func:`generate_synthetic`.

    ``kind`` is one of ``gbm``, ``regime_switch`` or ``sinusoid``; ``params``
    overrides the per-kind defaults in ``SYNTHETIC_DEFAULTS``.
    """

    kind: str
    length: int
    params: Mapping[str, float] = field(default_factory=dict)


SYNTHETIC_DEFAULTS: dict[str, dict[str, float]] = {
    # drift and volatility are per-step log-return parameters
    "gbm": {"start": 100.0, "drift": 0.0, "volatility": 0.01},
    "regime_switch": {"start": 100.0, "drift": 0.01, "volatility": 0.01, "segment_length": 60},
    "sinusoid": {"level": 100.0, "amplitude": 10.0, "period": 50.0, "noise": 0.0},
}
_COMMON_DEFAULTS = {"intrabar": 0.005, "volume": 1.0e6, "volume_dispersion": 0.2}
_POSITIVE = ("start", "level", "period", "segment_length", "volume")
_NON_NEGATIVE = ("volatility", "amplitude", "noise", "intrabar", "volume_dispersion")


def generate_synthetic(spec: SyntheticSpec | Mapping, seed: int) -> BarSeries:
    """Deterministic synthetic bar series.

    * ``gbm``: ``close[t] = start * exp(sum of (drift - vol**2/2 + vol*Z))``, ``close[0] = start``.
    * ``regime_switch``: as ``gbm`` but the drift sign flips every ``segment_length`` bars,
      starting positive.
    * ``sinusoid``: ``level + amplitude*sin(2*pi*t/period)``, optionally with
      multiplicative log-normal ``noise``.

    Opens equal the previous close; highs/lows widen the open-close range by a
    half-normal fraction ``intrabar``; volume is log-normal around ``volume``.
    Dates are business days from 2007-01-01.
    """
    if isinstance(spec, Mapping):
        spec = SyntheticSpec(spec["kind"], int(spec["length"]), dict(spec.get("params", {})))
    if spec.kind not in SYNTHETIC_DEFAULTS:
        raise DataError(f"unknown synthetic kind {spec.kind!r}; choose from {sorted(SYNTHETIC_DEFAULTS)}")
    if spec.length < 1:
        raise DataError(f"synthetic length must be >= 1, got {spec.length}")
    params = {**SYNTHETIC_DEFAULTS[spec.kind], **_COMMON_DEFAULTS}
    unknown = set(spec.params) - set(params)
    if unknown:
        raise DataError(f"unknown parameter(s) for {spec.kind}: {', '.join(sorted(unknown))}")
    params.update({k: float(v) for k, v in spec.params.items()})
    for key in _POSITIVE:
        if key in params and not params[key] > 0:
            raise DataError(f"{key} must be positive, got {params[key]}")
    for key in _NON_NEGATIVE:
        if key in params and not params[key] >= 0:
            raise DataError(f"{key} must be non-negative, got {params[key]}")

    n = spec.length
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    t = np.arange(n)
    if spec.kind == "sinusoid":
        if params["amplitude"] >= params["level"]:
            raise DataError("sinusoid amplitude must be below level to keep prices positive")
        close = params["level"] + params["amplitude"] * np.sin(2 * np.pi * t / params["period"])
        close = close * np.exp(params["noise"] * z)
    else:
        vol = params["volatility"]
        drift = np.full(n, params["drift"])
        if spec.kind == "regime_switch":
            seg = int(params["segment_length"])
            drift = np.where((t // seg) % 2 == 0, 1.0, -1.0) * params["drift"]
        steps = drift - 0.5 * vol**2 + vol * z
        steps[0] = 0.0
        # drift[t] drives the move from t-1 to t
        close = params["start"] * np.exp(np.cumsum(steps))

    open_ = np.concatenate([close[:1], close[:-1]])
    spread = params["intrabar"]
    up = np.abs(rng.standard_normal(n)) * spread
    down = np.abs(rng.standard_normal(n)) * spread
    high = np.maximum(open_, close) * np.exp(up)
    low = np.minimum(open_, close) * np.exp(-down)
    volume = params["volume"] * np.exp(params["volume_dispersion"] * rng.standard_normal(n))
    dates = np.busday_offset(np.datetime64("2007-01-01", "D"), t, roll="forward")
    return BarSeries(dates=dates, open=open_, high=high, low=low, close=close,
                     adj_close=close.copy(), volume=volume)


def chronological_split(series_length: int, train_fraction: float) -> tuple[range, range]:
    """Split ``range(series_length)`` into a leading train block and a trailing test block.

    The train block holds ``floor(train_fraction * series_length)`` indices.
    """
    if series_length < 2:
        raise DataError(f"need at least 2 rows to split, got {series_length}")
    if not 0 < train_fraction < 1:
        raise DataError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    # the epsilon absorbs representation error such as 0.29 * 100 = 28.999...
    n_train = math.floor(train_fraction * series_length + 1e-9)
    if n_train < 1 or n_train >= series_length:
        raise DataError(
            f"train_fraction {train_fraction} leaves an empty split for {series_length} rows"
        )
    return range(0, n_train), range(n_train, series_length)
