"""Walk through features and labels on a synthetic regime-switching series.

Run with ``python demos/indicators_and_labels.py``.
"""

import numpy as np

from trendlab.indicators import (
    DEFAULT_FAST_PERIODS,
    DEFAULT_SLOW_PERIODS,
    IndicatorSpec,
    build_crossover_features,
    build_indicator_matrix,
    compute_indicator,
    default_manifest,
    drop_warmup,
)
from trendlab.labeling import assign_labels, filter_trend_periods
from trendlab.market_data import SyntheticSpec, generate_synthetic

bars = generate_synthetic(SyntheticSpec("regime_switch", 600), seed=0)
print(f"{len(bars)} bars from {bars.dates[0]} to {bars.dates[-1]}")

# a single indicator: NaN during warm-up, finite afterwards
rsi = compute_indicator(IndicatorSpec("RSI", {"period": 14}), bars)
print("RSI warm-up:", rsi.warmup, "last values:", np.round(rsi.values[-3:, 0], 2))

# the built-in manifest plus adjusted close and volume
full = build_indicator_matrix(default_manifest(), bars)
print(f"full manifest: {full.shape[1]} columns, longest warm-up {max(full.warmup.values())} rows")

# fast/slow SMA differences
xo = build_crossover_features(DEFAULT_FAST_PERIODS, DEFAULT_SLOW_PERIODS, bars)
print(f"crossovers: {xo.shape[1]} columns, e.g. {xo.columns[:3]}")

# trend labels from the centred moving average, then the run filter
labels = assign_labels(bars.close, bars.dates)
filtered = filter_trend_periods(labels, bars.close, min_length=10)
up, down = np.mean(labels.labels == 1), np.mean(labels.labels == -1)
print(f"labels: {up:.1%} up, {down:.1%} down, {np.mean(labels.labels == 0):.1%} unknown")
print(f"eligible after filtering: {filtered.eligible.sum()} of {len(filtered)} rows")

# rows with complete features and a known label
X, kept = drop_warmup(full, filtered)
print(f"model-ready matrix: {X.shape}")

# how well do the labels track the hidden drift regime?
seg = 60
drift_sign = np.where((np.arange(len(bars)) // seg) % 2 == 0, 1, -1)
known = labels.labels != 0
print(f"label agrees with drift regime on {np.mean(labels.labels[known] == drift_sign[known]):.1%} of labelled rows")
