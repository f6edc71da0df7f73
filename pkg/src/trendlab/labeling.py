"""Trend labels from a centred moving average, plus the trend-period filter.

Labels are ``+1`` (uptrend), ``-1`` (downtrend) or ``0`` (unknown). At each
``t`` the rule compares the 7-point centred average ``cMA`` with the close:

* ``+1`` if ``cMA(t) > close(t)`` and ``cMA(t+3) > cMA(t+1)``
* ``-1`` if ``cMA(t) < close(t)`` and ``cMA(t+3) < cMA(t+1)``
* otherwise the previous label is kept (unknown before the first firing).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DataError

UNKNOWN = 0
HALF_WINDOW = 3


@dataclass(frozen=True, eq=False)
class LabelSeries:
    labels: np.ndarray
    eligible: np.ndarray
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int8)
        eligible = np.array(self.eligible, dtype=bool)
        if labels.ndim != 1 or labels.shape != eligible.shape:
            raise DataError("labels and eligible must be 1-D arrays of equal length")
        if not np.isin(labels, (-1, 0, 1)).all():
            raise DataError("labels must be in {-1, 0, +1}")
        if np.any(eligible & (labels == UNKNOWN)):
            raise DataError("unknown-labelled rows cannot be eligible")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "eligible", eligible)
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype="datetime64[D]")
            if ts.shape != labels.shape:
                raise DataError("timestamps must align with labels")
            object.__setattr__(self, "timestamps", ts)

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other):
        if not isinstance(other, LabelSeries):
            return NotImplemented
        same_ts = (self.timestamps is None and other.timestamps is None) or (
            self.timestamps is not None
            and other.timestamps is not None
            and np.array_equal(self.timestamps, other.timestamps)
        )
        return same_ts and np.array_equal(self.labels, other.labels) and np.array_equal(
            self.eligible, other.eligible
        )

    def take(self, idx) -> "LabelSeries":
        ts = None if self.timestamps is None else self.timestamps[idx]
        return LabelSeries(self.labels[idx], self.eligible[idx], ts)

    def to_csv(self) -> str:
        if self.timestamps is None:
            raise DataError("label export needs timestamps")
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["date", "label", "eligible"])
        for t in range(len(self)):
            writer.writerow([str(self.timestamps[t]), int(self.labels[t]), int(self.eligible[t])])
        return out.getvalue()


def centered_ma(close, half_window: int = HALF_WINDOW) -> tuple[np.ndarray, np.ndarray]:
    """Mean of ``close[t-h .. t+h]``.

    Returns ``(values, valid)``; values are NaN where the window leaves the series.
    """
    close = np.asarray(close, dtype=float)
    h = int(half_window)
    if h < 0:
        raise DataError("half_window must be non-negative")
    T = len(close)
    if T < 2 * h + 1:
        raise DataError(f"series of length {T} is shorter than the {2 * h + 1}-point window")
    width = 2 * h + 1
    values = np.full(T, np.nan)
    values[h:T - h] = np.lib.stride_tricks.sliding_window_view(close, width).mean(axis=1)
    valid = np.zeros(T, dtype=bool)
    valid[h:T - h] = True
    return values, valid


def assign_labels(close, timestamps=None) -> LabelSeries:
    """Apply the centred-average trend rule verbatim (strict inequalities).

    Eligibility is initialised to "label known"; use
    :func:`filter_trend_periods` to restrict it.
    """
    close = np.asarray(close, dtype=float)
    T = len(close)
    if T < 13:
        raise DataError(f"need at least 13 closes to label, got {T}")
    cma, _ = centered_ma(close, HALF_WINDOW)

    # the rule is evaluable where cMA(t), cMA(t+1) and cMA(t+3) all exist
    lead1 = np.full(T, np.nan)
    lead3 = np.full(T, np.nan)
    lead1[:-1] = cma[1:]
    lead3[:-3] = cma[3:]
    with np.errstate(invalid="ignore"):
        up = (cma > close) & (lead3 > lead1)
        down = (cma < close) & (lead3 < lead1)
    fired = np.where(up, 1, np.where(down, -1, 0)).astype(np.int8)

    labels = np.zeros(T, dtype=np.int8)
    current = UNKNOWN
    for t in range(T):
        if fired[t]:
            current = fired[t]
        labels[t] = current
    return LabelSeries(labels, labels != UNKNOWN, timestamps)


def label_runs(labels) -> list[tuple[int, int]]:
    """Maximal constant-label runs as half-open ``(start, stop)`` pairs."""
    labels = np.asarray(labels)
    if len(labels) == 0:
        return []
    breaks = np.flatnonzero(labels[1:] != labels[:-1]) + 1
    starts = np.concatenate([[0], breaks])
    stops = np.concatenate([breaks, [len(labels)]])
    return list(zip(starts.tolist(), stops.tolist()))


def filter_trend_periods(labels: LabelSeries, close, min_length: int = 10) -> LabelSeries:
    """Mark short or direction-inconsistent trend runs ineligible.

    A run of ``+1`` must end strictly above where it started, a run of ``-1``
    strictly below, and both must span at least ``min_length`` rows.
    Unknown rows are never eligible.
    """
    close = np.asarray(close, dtype=float)
    if len(close) != len(labels):
        raise DataError(f"{len(labels)} labels vs {len(close)} closes")
    if min_length < 1:
        raise DataError("min_length must be >= 1")
    eligible = np.zeros(len(labels), dtype=bool)
    for start, stop in label_runs(labels.labels):
        sign = int(labels.labels[start])
        if sign == UNKNOWN or stop - start < min_length:
            continue
        change = close[stop - 1] - close[start]
        if sign * change > 0:
            eligible[start:stop] = True
    return LabelSeries(labels.labels, eligible, labels.timestamps)
