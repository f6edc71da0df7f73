import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trendlab.errors import IndicatorError
from trendlab.indicators import (
    DEFAULT_MANIFEST_COLUMNS,
    MAMA_WARMUP,
    DEFAULT_FAST_PERIODS,
    DEFAULT_SLOW_PERIODS,
    REGISTRY,
    FeatureMatrix,
    IndicatorSpec,
    build_crossover_features,
    build_indicator_matrix,
    compute_indicator,
    default_manifest,
    drop_warmup,
    parse_manifest,
    render_manifest,
)
from trendlab.labeling import LabelSeries

from helpers import make_bars, random_series

# indicators whose value at t depends only on a bounded look-back window
FINITE_WINDOW = ["SMA", "WMA", "TRIMA", "MOM", "ROC", "WILLR", "BBANDS", "BBW", "PCTB", "CCI",
                 "CMO", "STOCH", "AROON", "AROONOSC", "MINMAX", "BOP", "RVI", "MFI", "ULTOSC"]


def values(spec, bars):
    return compute_indicator(spec, bars).values


# ------------------------------------------------------------------ examples


def test_sma_period_two():
    out = values(IndicatorSpec("SMA", {"period": 2}), make_bars([1, 2, 3, 4]))
    assert np.isnan(out[0, 0])
    np.testing.assert_array_equal(out[1:, 0], [1.5, 2.5, 3.5])


def test_rsi_strictly_increasing_is_100():
    fm = compute_indicator(IndicatorSpec("RSI", {"period": 14}), make_bars(np.arange(1.0, 61.0)))
    assert fm.warmup["rsi_14"] == 14
    np.testing.assert_array_equal(fm.values[fm.valid], 100.0)


def test_wma_hand_value():
    out = values(IndicatorSpec("WMA", {"period": 3}), make_bars([1, 2, 3]))
    assert out[2, 0] == pytest.approx(14 / 6, rel=1e-15)


def test_rsi_flat_series_is_neutral():
    out = values(IndicatorSpec("RSI", {"period": 3}), make_bars(np.full(10, 5.0)))
    np.testing.assert_array_equal(out[3:, 0], 50.0)


def test_roc_is_ratio():
    out = values(IndicatorSpec("ROC", {"period": 2}), make_bars([2.0, 3.0, 4.0, 6.0]))
    np.testing.assert_allclose(out[2:, 0], [2.0, 2.0])


def test_obv_hand_value():
    bars = make_bars([10, 11, 11, 10], volume=[5, 7, 3, 2])
    np.testing.assert_array_equal(values(IndicatorSpec("OBV"), bars)[:, 0], [5, 12, 12, 10])


def test_ema_seeded_with_sma():
    out = values(IndicatorSpec("EMA", {"period": 3}), make_bars([1, 2, 3, 4, 5]))
    # seed mean(1,2,3)=2, then 0.5*4+0.5*2=3, then 0.5*5+0.5*3=4
    np.testing.assert_allclose(out[2:, 0], [2.0, 3.0, 4.0])


# ------------------------------------------------------------------ crossovers


def test_default_crossovers_have_121_columns():
    bars = random_series(100)
    fm = build_crossover_features(DEFAULT_FAST_PERIODS, DEFAULT_SLOW_PERIODS, bars)
    assert fm.shape == (100, 121)
    assert fm.columns[0] == "xover_5_20" and fm.columns[-1] == "xover_15_30"
    for name, w in fm.warmup.items():
        assert w == int(name.rsplit("_", 1)[1]) - 1


def test_crossover_constant_series_is_zero():
    fm = build_crossover_features([2, 3], [5, 7], make_bars(np.full(30, 42.0)))
    np.testing.assert_array_equal(fm.values[fm.valid], 0.0)


def test_crossover_hand_value():
    fm = build_crossover_features([2], [3], make_bars([1, 2, 3, 4]))
    assert fm.values[3, 0] == pytest.approx(0.5)


@given(fast=st.lists(st.integers(1, 9), min_size=1, max_size=5),
       slow=st.lists(st.integers(10, 20), min_size=1, max_size=5))
@settings(max_examples=25, deadline=None)
def test_crossover_column_count(fast, slow):
    fast, slow = sorted(set(fast)), sorted(set(slow))
    fm = build_crossover_features(fast, slow, random_series(40))
    assert fm.shape[1] == len(fast) * len(slow)


@pytest.mark.parametrize("fast, slow", [([5, 20], [20, 30]), ([], [20]), ([5], []), ([5], [200])])
def test_crossover_errors(fast, slow):
    with pytest.raises(IndicatorError):
        build_crossover_features(fast, slow, random_series(100))


# ------------------------------------------------------------------ registry


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_every_indicator_on_random_bars(name):
    bars = random_series(200, seed=5)
    fm = compute_indicator(IndicatorSpec(name), bars)
    assert fm.shape == (200, len(REGISTRY[name].outputs))
    assert np.all(np.isfinite(fm.values[fm.valid]))
    assert np.all(~np.isfinite(fm.values[~fm.valid]))
    assert max(fm.warmup.values()) < 100


@pytest.mark.parametrize("name, lo, hi", [
    ("RSI", 0, 100), ("STOCH", 0, 100), ("WILLR", -100, 0), ("MFI", 0, 100), ("ULTOSC", 0, 100),
    ("AROON", 0, 100), ("AROONOSC", -100, 100), ("CMO", -100, 100), ("DX", 0, 100),
    ("ADX", 0, 100), ("PLUS_DI", 0, 100), ("BOP", -1, 1),
])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_oscillator_ranges(name, lo, hi, seed):
    fm = compute_indicator(IndicatorSpec(name), random_series(200, seed))
    v = fm.values[fm.valid]
    assert v.min() >= lo - 1e-9 and v.max() <= hi + 1e-9


@pytest.mark.parametrize("name", sorted(FINITE_WINDOW))
@settings(max_examples=10, deadline=None)
@given(k=st.integers(1, 60), seed=st.integers(0, 1000))
def test_shift_equivariance_finite_window(name, k, seed):
    bars = random_series(160, seed)
    full = compute_indicator(IndicatorSpec(name), bars)
    part = compute_indicator(IndicatorSpec(name), bars[k:])
    w = max(part.warmup.values())
    np.testing.assert_allclose(part.values[w:], full.values[k + w:], rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("name", ["EMA", "DEMA", "TEMA", "RSI", "ATR", "ADX", "PLUS_DM", "APO", "MACD"])
def test_shift_equivariance_recursive_is_asymptotic(name):
    # recursive smoothers depend on their seed window, whose influence decays geometrically
    bars = random_series(1200, seed=9)
    spec = IndicatorSpec(name, {"period": 5} if REGISTRY[name].parametric else {})
    full = compute_indicator(spec, bars).values
    part = compute_indicator(spec, bars[50:]).values
    np.testing.assert_allclose(part[-100:], full[-100:], rtol=1e-8)


def test_mama_warmup():
    fm = compute_indicator(IndicatorSpec("MAMA"), random_series(100))
    assert fm.warmup == {"mama": MAMA_WARMUP, "fama": MAMA_WARMUP}


def test_sar_stays_outside_bar_range_when_trend_persists():
    bars = make_bars(np.linspace(100, 200, 60), high=np.linspace(100, 200, 60) + 1,
                     low=np.linspace(100, 200, 60) - 1)
    sar = values(IndicatorSpec("SAR"), bars)[1:, 0]
    assert np.all(sar <= bars.low[1:])


@pytest.mark.parametrize("spec", [
    IndicatorSpec("NOPE"),
    IndicatorSpec("SMA", {"period": 0}),
    IndicatorSpec("SMA", {"period": 2.5}),
    IndicatorSpec("SMA", {"length": 3}),
    IndicatorSpec("APO", {"fast": 30, "slow": 10}),
    IndicatorSpec("BBANDS", {"nbdev": -1}),
])
def test_invalid_specs(spec):
    with pytest.raises(IndicatorError):
        compute_indicator(spec, random_series(50))


def test_period_longer_than_series():
    with pytest.raises(IndicatorError, match="too short"):
        compute_indicator(IndicatorSpec("SMA", {"period": 30}), random_series(20))


def test_volume_indicator_needs_volume():
    with pytest.raises(IndicatorError, match="volume"):
        compute_indicator(IndicatorSpec("OBV"), make_bars(np.arange(1.0, 20.0)))


def test_column_names():
    assert IndicatorSpec("RSI", {"period": 3}).column_names() == ["rsi_3"]
    assert IndicatorSpec("MACD").column_names() == ["macd", "macd_signal", "macd_hist"]
    assert IndicatorSpec("BBANDS", {"period": 14, "nbdev": 1.5}).column_names() == [
        "bb_upper_14_1.5", "bb_middle_14_1.5", "bb_lower_14_1.5"]


# ------------------------------------------------------------------ matrices


def test_singleton_manifest_matches_compute():
    bars = make_bars([1, 2, 3, 4])
    spec = IndicatorSpec("SMA", {"period": 2})
    fm = build_indicator_matrix([spec], bars, include_price_volume=False)
    single = compute_indicator(spec, bars)
    assert fm.columns == single.columns
    np.testing.assert_array_equal(fm.values, single.values)
    np.testing.assert_array_equal(fm.valid, single.valid)


def test_price_volume_columns_on_constant_series():
    bars = make_bars(np.full(10, 100.0))
    fm = build_indicator_matrix([IndicatorSpec("SMA", {"period": 2})], bars, include_price_volume=True)
    assert fm.columns[-2:] == ("adj_close", "volume")
    np.testing.assert_array_equal(fm.column("adj_close"), 100.0)
    np.testing.assert_array_equal(fm.column("volume"), 0.0)


def test_default_manifest_column_count():
    manifest = default_manifest()
    parametric = [s for s in manifest if REGISTRY[s.name].parametric]
    assert {s.params["period"] for s in parametric} == {3, 14, 30}
    assert len(parametric) == 3 * sum(d.parametric for d in REGISTRY.values())
    fm = build_indicator_matrix(manifest, random_series(300))
    assert fm.shape[1] == DEFAULT_MANIFEST_COLUMNS
    assert len(set(fm.columns)) == fm.shape[1]


def test_duplicate_columns_rejected():
    spec = IndicatorSpec("SMA", {"period": 3})
    with pytest.raises(IndicatorError, match="duplicate"):
        build_indicator_matrix([spec, spec], random_series(50))


def test_empty_manifest_rejected():
    with pytest.raises(IndicatorError):
        build_indicator_matrix([], random_series(50))


def test_manifest_round_trip():
    text = "# core set\nSMA(period=3)\nrsi(period=14)  # Wilder\n\nBBANDS(period=20,nbdev=1.5)\nOBV\n"
    specs = parse_manifest(text)
    assert [s.name for s in specs] == ["SMA", "RSI", "BBANDS", "OBV"]
    assert specs[2].params == {"period": 20, "nbdev": 1.5}
    assert parse_manifest(render_manifest(specs)) == specs
    assert parse_manifest(render_manifest(default_manifest())) == default_manifest()


@pytest.mark.parametrize("line", ["SMA(period)", "SMA(period=x)", "FOO(period=3)", "SMA(period=3", "3SMA"])
def test_manifest_parse_errors(line):
    with pytest.raises(IndicatorError, match="line 2"):
        parse_manifest("SMA(period=5)\n" + line)


# ------------------------------------------------------------------ FeatureMatrix


def _ts(n):
    return np.datetime64("2010-01-01") + np.arange(n)


def test_feature_matrix_rejects_non_prefix_mask():
    with pytest.raises(IndicatorError, match="prefix"):
        FeatureMatrix(("a",), [[1.0], [2.0], [3.0]], [[True], [False], [True]], _ts(3))


def test_feature_matrix_rejects_duplicates_and_nonfinite():
    with pytest.raises(IndicatorError, match="duplicate"):
        FeatureMatrix(("a", "a"), np.ones((2, 2)), np.ones((2, 2), bool), _ts(2))
    with pytest.raises(IndicatorError, match="non-finite"):
        FeatureMatrix(("a",), [[np.inf]], [[True]], _ts(1))


def test_feature_matrix_csv_uses_nan_literal():
    fm = compute_indicator(IndicatorSpec("SMA", {"period": 2}), make_bars([1, 2, 3]))
    assert fm.to_csv() == "date,sma_2\n2010-01-01,NaN\n2010-01-02,1.5\n2010-01-03,2.5\n"


# ------------------------------------------------------------------ drop_warmup


def _labels(values):
    values = np.asarray(values)
    return LabelSeries(values, values != 0, _ts(len(values)))


def test_drop_warmup_identity():
    fm = FeatureMatrix(("a",), np.arange(5.0)[:, None], np.ones((5, 1), bool), _ts(5))
    X, y = drop_warmup(fm, _labels([1, -1, 1, 1, -1]))
    np.testing.assert_array_equal(X, fm.values)
    np.testing.assert_array_equal(y.labels, [1, -1, 1, 1, -1])


def test_drop_warmup_drops_prefix():
    bars = random_series(100)
    fm = compute_indicator(IndicatorSpec("SMA", {"period": 30}), bars)
    X, y = drop_warmup(fm, _labels(np.ones(100, int)))
    assert len(X) == 71 and len(y) == 71
    np.testing.assert_array_equal(X, fm.values[29:])


def test_drop_warmup_mask_intersection():
    valid = np.zeros((20, 1), bool)
    valid[5:] = True
    fm = FeatureMatrix(("a",), np.arange(20.0)[:, None], valid, _ts(20))
    X, y = drop_warmup(fm, _labels([0] * 10 + [1] * 10))
    np.testing.assert_array_equal(X[:, 0], np.arange(10.0, 20.0))
    np.testing.assert_array_equal(y.timestamps, _ts(20)[10:])


def test_drop_warmup_empty_result():
    fm = FeatureMatrix(("a",), np.ones((3, 1)), np.ones((3, 1), bool), _ts(3))
    with pytest.raises(IndicatorError):
        drop_warmup(fm, _labels([0, 0, 0]))
