"""Technical indicators and feature matrices.

Every indicator is computed on the bar ``close`` (plus ``open``/``high``/
``low``/``volume`` where needed) and returns NaN on its warm-up prefix.
Reference definitions used throughout:

========  ==================================================================
SMA       arithmetic mean of the last ``period`` closes
EMA       multiplier ``2/(period+1)``, seeded with the SMA of the first window
WMA       linear weights ``1..period`` (newest heaviest)
DEMA      ``2*EMA - EMA(EMA)``
TEMA      ``3*EMA - 3*EMA(EMA) + EMA(EMA(EMA))``
TRIMA     SMA of SMA; odd ``n``: both ``(n+1)/2``; even ``n``: ``n/2`` then ``n/2+1``
KAMA      efficiency ratio over ``period``; fast/slow constants 2/30; seeded at close
MAMA      Ehlers MESA adaptive average, fast/slow limits 0.5/0.05; outputs MAMA, FAMA
BBANDS    SMA +/- ``nbdev`` (2) population standard deviations
BBW       ``(upper - lower) / middle``
PCTB      ``(close - lower) / (upper - lower)``; 0.5 when the bands coincide
MINMAX    rolling min and max of close
SAR       Wilder parabolic SAR, acceleration 0.02 step, 0.2 cap
APO       ``EMA12 - EMA26``
PPO       ``100 * (EMA12 - EMA26) / EMA26``
MACD      ``EMA12 - EMA26``, signal ``EMA9`` of MACD, histogram
AROON     up/down ``100*(period - bars since extreme)/period`` over ``period+1`` bars
AROONOSC  aroon up minus aroon down
PLUS_DM   Wilder-smoothed (average form, ``1/period``) +DM
PLUS_DI   ``100 * smoothed(+DM) / smoothed(TR)``
DX        ``100 * |+DI - -DI| / (+DI + -DI)``
ADX       Wilder average of DX
ADXR      ``(ADX[t] + ADX[t - period + 1]) / 2``
ATR       Wilder average of true range
BOP       ``(close - open) / (high - low)``
ADOSC     ``EMA3 - EMA10`` of the accumulation/distribution line
CMO       ``100 * (sum up - sum down) / (sum up + sum down)`` over ``period`` moves
CCI       ``(tp - SMA(tp)) / (0.015 * mean |tp - SMA(tp)|)``, ``tp = (h+l+c)/3``
MOM       ``close[t] - close[t-period]``
ROC       rate-of-change ratio ``close[t] / close[t-period]``
RSI       Wilder averages of gains and losses; 50 when both are zero
RVI       SMA of 1-2-2-1 weighted ``close-open`` over SMA of weighted ``high-low``
MFI       money-flow ratio over ``period`` typical-price moves
OBV       ``obv[0] = volume[0]``, then +/- volume by close direction
STOCH     %K over 14 bars (50 on a flat range), %D = SMA3 of %K
TRIX      ``100 * (E3[t]/E3[t-1] - 1)`` with ``E3`` the triple EMA
ULTOSC    buying pressure over true range, 7/14/28 bars weighted 4:2:1
WILLR     ``-100 * (HH - close) / (HH - LL)``; -50 on a flat range
========  ==================================================================

Ratios whose denominator vanishes (relative to the data scale) take the
documented neutral value instead of producing NaN.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import lfilter

from .errors import IndicatorError
from .labeling import LabelSeries
from .market_data import BarSeries

_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """T x F feature values with per-cell validity and aligned timestamps.

    Invalid cells hold NaN. Validity is a monotone prefix per column: false
    on ``[0, w)`` and true on ``[w, T)``.
    """

    columns: tuple[str, ...]
    values: np.ndarray
    valid: np.ndarray
    timestamps: np.ndarray

    def __post_init__(self):
        columns = tuple(self.columns)
        values = np.array(self.values, dtype=float)
        valid = np.array(self.valid, dtype=bool)
        timestamps = np.asarray(self.timestamps, dtype="datetime64[D]")
        if values.ndim != 2 or values.shape != valid.shape:
            raise IndicatorError("values and valid must be matching 2-D arrays")
        if values.shape[1] != len(columns) or values.shape[0] != len(timestamps):
            raise IndicatorError(
                f"shape {values.shape} inconsistent with {len(columns)} columns "
                f"and {len(timestamps)} timestamps"
            )
        if len(set(columns)) != len(columns):
            dupes = sorted({c for c in columns if columns.count(c) > 1})
            raise IndicatorError(f"duplicate column names: {', '.join(dupes)}")
        if np.any(valid[1:] < valid[:-1]):
            j = int(np.argmax(np.any(valid[1:] < valid[:-1], axis=0)))
            raise IndicatorError(f"column {columns[j]!r} has a non-prefix validity mask")
        if not np.all(np.isfinite(values[valid])):
            j = int(np.argmax(np.any(valid & ~np.isfinite(values), axis=0)))
            raise IndicatorError(f"column {columns[j]!r} has non-finite valid cells")
        values[~valid] = np.nan
        for arr in (values, valid, timestamps):
            arr.setflags(write=False)
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)
        object.__setattr__(self, "timestamps", timestamps)

    @classmethod
    def from_columns(cls, columns: Mapping[str, np.ndarray], timestamps) -> "FeatureMatrix":
        """Build from NaN-prefixed column arrays; validity is ``isfinite``."""
        names = list(columns)
        T = len(timestamps)
        values = np.empty((T, len(names)))
        for j, name in enumerate(names):
            values[:, j] = columns[name]
        return cls(tuple(names), values, np.isfinite(values), timestamps)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def warmup(self) -> dict[str, int]:
        """Length of the invalid prefix of each column."""
        return dict(zip(self.columns, (~self.valid).sum(axis=0).tolist()))

    @property
    def row_valid(self) -> np.ndarray:
        return self.valid.all(axis=1)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise IndicatorError(f"no column named {name!r}") from None

    def select(self, names: Sequence[str]) -> "FeatureMatrix":
        idx = [self.columns.index(n) for n in names]
        return FeatureMatrix(tuple(names), self.values[:, idx], self.valid[:, idx], self.timestamps)

    def with_values(self, values: np.ndarray) -> "FeatureMatrix":
        """Same columns, mask and timestamps with replaced values."""
        return FeatureMatrix(self.columns, values, self.valid, self.timestamps)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(("date",) + self.columns)
        for t in range(self.shape[0]):
            writer.writerow(
                [str(self.timestamps[t])]
                + ["NaN" if not ok else repr(float(v)) for v, ok in zip(self.values[t], self.valid[t])]
            )
        return out.getvalue()


def concat_features(parts: Iterable[FeatureMatrix]) -> FeatureMatrix:
    parts = list(parts)
    if not parts:
        raise IndicatorError("nothing to concatenate")
    ts = parts[0].timestamps
    for p in parts[1:]:
        if not np.array_equal(p.timestamps, ts):
            raise IndicatorError("feature blocks are not aligned on timestamps")
    return FeatureMatrix(
        tuple(c for p in parts for c in p.columns),
        np.hstack([p.values for p in parts]),
        np.hstack([p.valid for p in parts]),
        ts,
    )


# --------------------------------------------------------------------------
# numeric building blocks (NaN marks the undefined prefix)


def _nan(n: int) -> np.ndarray:
    return np.full(n, np.nan)


def _first_finite(x: np.ndarray) -> int:
    ok = np.isfinite(x)
    return int(np.argmax(ok)) if ok.any() else len(x)


def _rolling(x: np.ndarray, n: int, reduce: Callable) -> np.ndarray:
    out = _nan(len(x))
    if n <= len(x):
        out[n - 1:] = reduce(sliding_window_view(x, n), axis=1)
    return out


def _sma(x, n):
    return _rolling(x, n, np.mean)


def _rolling_sum(x, n):
    return _rolling(x, n, np.sum)


def _shift(x: np.ndarray, k: int) -> np.ndarray:
    out = _nan(len(x))
    if k < len(x):
        out[k:] = x[: len(x) - k]
    return out


def _smooth(x: np.ndarray, n: int, alpha: float) -> np.ndarray:
    """Exponential recursion ``y = alpha*x + (1-alpha)*y_prev`` seeded by the first window mean."""
    out = _nan(len(x))
    s = _first_finite(x)
    if s + n > len(x):
        return out
    seed = float(np.mean(x[s:s + n]))
    out[s + n - 1] = seed
    rest = x[s + n:]
    if len(rest):
        out[s + n:], _ = lfilter([alpha], [1.0, alpha - 1.0], rest, zi=[(1.0 - alpha) * seed])
    return out


def _ema(x, n):
    return _smooth(x, n, 2.0 / (n + 1))


def _wilder(x, n):
    return _smooth(x, n, 1.0 / n)


def _ratio(num, den, fill, scale=None):
    """``num/den``, replaced by ``fill`` where ``den`` is zero.

    With ``scale`` given, ``|den| <= 1e-12*|scale|`` also counts as zero, which
    absorbs rounding residue such as the deviation of a constant window.
    """
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    if scale is None:
        degenerate = den == 0
    else:
        degenerate = np.abs(den) <= _EPS * np.abs(scale)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    return np.where(degenerate, fill, out)


def _true_range(high, low, close):
    prev = _shift(close, 1)
    tr = np.maximum.reduce([high - low, np.abs(high - prev), np.abs(low - prev)])
    tr[0] = np.nan
    return tr


def _directional_movement(high, low):
    up = high - _shift(high, 1)
    down = _shift(low, 1) - low
    plus = np.where((up > down) & (up > 0), up, 0.0)
    minus = np.where((down > up) & (down > 0), down, 0.0)
    plus[0] = minus[0] = np.nan
    return plus, minus


# --------------------------------------------------------------------------
# indicator implementations: each returns {output_name: array}


def _ind_sma(b, period):
    return {"sma": _sma(b.close, period)}


def _ind_ema(b, period):
    return {"ema": _ema(b.close, period)}


def _ind_wma(b, period):
    w = np.arange(1, period + 1, dtype=float)
    return {"wma": _rolling(b.close, period, lambda win, axis: win @ w / w.sum())}


def _ind_dema(b, period):
    e1 = _ema(b.close, period)
    return {"dema": 2 * e1 - _ema(e1, period)}


def _ind_tema(b, period):
    e1 = _ema(b.close, period)
    e2 = _ema(e1, period)
    return {"tema": 3 * e1 - 3 * e2 + _ema(e2, period)}


def _ind_trima(b, period):
    if period % 2:
        n1 = n2 = (period + 1) // 2
    else:
        n1, n2 = period // 2, period // 2 + 1
    return {"trima": _sma(_sma(b.close, n1), n2)}


def _ind_kama(b, period, fast, slow):
    c = b.close
    T = len(c)
    change = np.abs(c - _shift(c, period))
    noise = _rolling_sum(np.abs(np.diff(c, prepend=np.nan)), period)
    er = _ratio(change, noise, 0.0, scale=c)
    fast_sc, slow_sc = 2.0 / (fast + 1), 2.0 / (slow + 1)
    sc = (er * (fast_sc - slow_sc) + slow_sc) ** 2
    out = _nan(T)
    if period < T:
        k = c[period - 1]
        for t in range(period, T):
            k = k + sc[t] * (c[t] - k)
            out[t] = k
    return {"kama": out}


MAMA_WARMUP = 32


def _ind_mama(b, fast_limit, slow_limit):
    """Ehlers' MESA adaptive moving average (Hilbert-transform phase rate)."""
    p = b.close
    T = len(p)
    smooth = np.zeros(T)
    det = np.zeros(T)
    i1 = np.zeros(T)
    q1 = np.zeros(T)
    i2 = np.zeros(T)
    q2 = np.zeros(T)
    re_ = np.zeros(T)
    im_ = np.zeros(T)
    per = np.zeros(T)
    phase = np.zeros(T)
    mama = np.full(T, p[0])
    fama = np.full(T, p[0])

    def hilbert(x, t, adj):
        return (0.0962 * x[t] + 0.5769 * x[t - 2] - 0.5769 * x[t - 4] - 0.0962 * x[t - 6]) * adj

    for t in range(T):
        if t < 6:
            if t:
                mama[t] = mama[t - 1]
                fama[t] = fama[t - 1]
            continue
        smooth[t] = (4 * p[t] + 3 * p[t - 1] + 2 * p[t - 2] + p[t - 3]) / 10.0
        adj = 0.075 * per[t - 1] + 0.54
        det[t] = hilbert(smooth, t, adj)
        q1[t] = hilbert(det, t, adj)
        i1[t] = det[t - 3]
        ji = hilbert(i1, t, adj)
        jq = hilbert(q1, t, adj)
        i2[t] = 0.2 * (i1[t] - jq) + 0.8 * i2[t - 1]
        q2[t] = 0.2 * (q1[t] + ji) + 0.8 * q2[t - 1]
        re_[t] = 0.2 * (i2[t] * i2[t - 1] + q2[t] * q2[t - 1]) + 0.8 * re_[t - 1]
        im_[t] = 0.2 * (i2[t] * q2[t - 1] - q2[t] * i2[t - 1]) + 0.8 * im_[t - 1]
        pr = per[t - 1]
        if im_[t] != 0.0 and re_[t] != 0.0:
            pr = 360.0 / math.degrees(math.atan(im_[t] / re_[t]))
        pr = min(pr, 1.5 * per[t - 1]) if per[t - 1] > 0 else pr
        pr = max(pr, 0.67 * per[t - 1])
        pr = min(max(pr, 6.0), 50.0)
        per[t] = 0.2 * pr + 0.8 * per[t - 1]
        phase[t] = math.degrees(math.atan(q1[t] / i1[t])) if i1[t] != 0.0 else phase[t - 1]
        delta = max(phase[t - 1] - phase[t], 1.0)
        alpha = min(max(fast_limit / delta, slow_limit), fast_limit)
        mama[t] = alpha * p[t] + (1 - alpha) * mama[t - 1]
        fama[t] = 0.5 * alpha * mama[t] + (1 - 0.5 * alpha) * fama[t - 1]
    mama[:MAMA_WARMUP] = np.nan
    fama[:MAMA_WARMUP] = np.nan
    return {"mama": mama, "fama": fama}


def _bands(b, period, nbdev):
    mid = _sma(b.close, period)
    sd = _rolling(b.close, period, np.std)
    sd = np.where(sd <= _EPS * np.abs(mid), 0.0, sd)
    return mid + nbdev * sd, mid, mid - nbdev * sd


def _ind_bbands(b, period, nbdev):
    up, mid, lo = _bands(b, period, nbdev)
    return {"bb_upper": up, "bb_middle": mid, "bb_lower": lo}


def _ind_bbw(b, period, nbdev):
    up, mid, lo = _bands(b, period, nbdev)
    return {"bbw": _ratio(up - lo, mid, 0.0)}


def _ind_pctb(b, period, nbdev):
    up, _, lo = _bands(b, period, nbdev)
    return {"pctb": _ratio(b.close - lo, up - lo, 0.5)}


def _ind_minmax(b, period):
    return {"min": _rolling(b.close, period, np.min), "max": _rolling(b.close, period, np.max)}


def _ind_sar(b, acceleration, maximum):
    h, l, c = b.high, b.low, b.close
    T = len(c)
    out = _nan(T)
    if T < 2:
        return {"sar": out}
    long = c[1] >= c[0]
    if long:
        ep, s = max(h[0], h[1]), min(l[0], l[1])
    else:
        ep, s = min(l[0], l[1]), max(h[0], h[1])
    af = acceleration
    out[1] = s
    for t in range(2, T):
        s = s + af * (ep - s)
        if long:
            s = min(s, l[t - 1], l[t - 2])
            if l[t] < s:
                long, s, ep, af = False, ep, l[t], acceleration
            elif h[t] > ep:
                ep, af = h[t], min(af + acceleration, maximum)
        else:
            s = max(s, h[t - 1], h[t - 2])
            if h[t] > s:
                long, s, ep, af = True, ep, h[t], acceleration
            elif l[t] < ep:
                ep, af = l[t], min(af + acceleration, maximum)
        out[t] = s
    return {"sar": out}


def _ind_apo(b, fast, slow):
    return {"apo": _ema(b.close, fast) - _ema(b.close, slow)}


def _ind_ppo(b, fast, slow):
    slow_ma = _ema(b.close, slow)
    return {"ppo": 100.0 * _ratio(_ema(b.close, fast) - slow_ma, slow_ma, 0.0)}


def _ind_macd(b, fast, slow, signal):
    macd = _ema(b.close, fast) - _ema(b.close, slow)
    sig = _ema(macd, signal)
    return {"macd": macd, "macd_signal": sig, "macd_hist": macd - sig}


def _aroon(b, period):
    T = len(b.close)
    up, down = _nan(T), _nan(T)
    if period < T:
        # reversed windows so ties resolve to the most recent extreme
        hw = sliding_window_view(b.high, period + 1)[:, ::-1]
        lw = sliding_window_view(b.low, period + 1)[:, ::-1]
        up[period:] = 100.0 * (period - np.argmax(hw, axis=1)) / period
        down[period:] = 100.0 * (period - np.argmin(lw, axis=1)) / period
    return up, down


def _ind_aroon(b, period):
    up, down = _aroon(b, period)
    return {"aroon_up": up, "aroon_down": down}


def _ind_aroonosc(b, period):
    up, down = _aroon(b, period)
    return {"aroonosc": up - down}


def _di(b, period):
    plus, minus = _directional_movement(b.high, b.low)
    tr = _wilder(_true_range(b.high, b.low, b.close), period)
    pdi = 100.0 * _ratio(_wilder(plus, period), tr, 0.0)
    mdi = 100.0 * _ratio(_wilder(minus, period), tr, 0.0)
    return pdi, mdi


def _dx(b, period):
    pdi, mdi = _di(b, period)
    return 100.0 * _ratio(np.abs(pdi - mdi), pdi + mdi, 0.0)


def _ind_plus_dm(b, period):
    plus, _ = _directional_movement(b.high, b.low)
    return {"plus_dm": _wilder(plus, period)}


def _ind_plus_di(b, period):
    return {"plus_di": _di(b, period)[0]}


def _ind_dx(b, period):
    return {"dx": _dx(b, period)}


def _ind_adx(b, period):
    return {"adx": _wilder(_dx(b, period), period)}


def _ind_adxr(b, period):
    adx = _wilder(_dx(b, period), period)
    return {"adxr": 0.5 * (adx + _shift(adx, period - 1))}


def _ind_atr(b, period):
    return {"atr": _wilder(_true_range(b.high, b.low, b.close), period)}


def _ind_bop(b):
    return {"bop": _ratio(b.close - b.open, b.high - b.low, 0.0)}


def _ind_adosc(b, fast, slow):
    h, l, c = b.high, b.low, b.close
    clv = _ratio((c - l) - (h - c), h - l, 0.0)
    ad = np.cumsum(clv * b.volume)
    return {"adosc": _ema(ad, fast) - _ema(ad, slow)}


def _ind_cmo(b, period):
    d = np.diff(b.close, prepend=np.nan)
    su = _rolling_sum(np.maximum(d, 0.0), period)
    sd = _rolling_sum(np.maximum(-d, 0.0), period)
    return {"cmo": 100.0 * _ratio(su - sd, su + sd, 0.0)}


def _ind_cci(b, period):
    tp = (b.high + b.low + b.close) / 3.0
    T = len(tp)
    out = _nan(T)
    if period <= T:
        win = sliding_window_view(tp, period)
        mean = win.mean(axis=1)
        md = np.abs(win - mean[:, None]).mean(axis=1)
        out[period - 1:] = _ratio(tp[period - 1:] - mean, 0.015 * md, 0.0, scale=mean)
    return {"cci": out}


def _ind_mom(b, period):
    return {"mom": b.close - _shift(b.close, period)}


def _ind_roc(b, period):
    return {"roc": b.close / _shift(b.close, period)}


def _ind_rsi(b, period):
    d = np.diff(b.close, prepend=np.nan)
    gain = _wilder(np.maximum(d, 0.0), period)
    loss = _wilder(np.maximum(-d, 0.0), period)
    return {"rsi": 100.0 * _ratio(gain, gain + loss, 0.5)}


def _ind_rvi(b, period):
    def weighted(x):
        return (x + 2 * _shift(x, 1) + 2 * _shift(x, 2) + _shift(x, 3)) / 6.0

    num = _sma(weighted(b.close - b.open), period)
    den = _sma(weighted(b.high - b.low), period)
    return {"rvi": _ratio(num, den, 0.0)}


def _ind_mfi(b, period):
    tp = (b.high + b.low + b.close) / 3.0
    flow = tp * b.volume
    d = np.diff(tp, prepend=np.nan)
    undefined = np.isnan(d)
    pos = _rolling_sum(np.where(undefined, np.nan, np.where(d > 0, flow, 0.0)), period)
    neg = _rolling_sum(np.where(undefined, np.nan, np.where(d < 0, flow, 0.0)), period)
    return {"mfi": 100.0 * _ratio(pos, pos + neg, 0.5)}


def _ind_obv(b):
    step = np.sign(np.diff(b.close)) * b.volume[1:]
    return {"obv": b.volume[0] + np.concatenate([[0.0], np.cumsum(step)])}


def _ind_stoch(b, k_period, d_period):
    hh = _rolling(b.high, k_period, np.max)
    ll = _rolling(b.low, k_period, np.min)
    k = 100.0 * _ratio(b.close - ll, hh - ll, 0.5)
    return {"stoch_k": k, "stoch_d": _sma(k, d_period)}


def _ind_trix(b, period):
    e3 = _ema(_ema(_ema(b.close, period), period), period)
    return {"trix": 100.0 * (e3 / _shift(e3, 1) - 1.0)}


def _ind_ultosc(b, fast, medium, slow):
    prev = _shift(b.close, 1)
    lo = np.minimum(b.low, prev)
    bp = b.close - lo
    tr = np.maximum(b.high, prev) - lo
    avgs = [_ratio(_rolling_sum(bp, n), _rolling_sum(tr, n), 0.0) for n in (fast, medium, slow)]
    return {"ultosc": 100.0 * (4 * avgs[0] + 2 * avgs[1] + avgs[2]) / 7.0}


def _ind_willr(b, period):
    hh = _rolling(b.high, period, np.max)
    ll = _rolling(b.low, period, np.min)
    return {"willr": -100.0 * _ratio(hh - b.close, hh - ll, 0.5)}


# --------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class IndicatorDef:
    func: Callable
    defaults: Mapping[str, float]
    outputs: tuple[str, ...]
    kind: str
    needs_volume: bool = False

    @property
    def parametric(self) -> bool:
        return "period" in self.defaults


def _d(func, outputs, kind, needs_volume=False, **defaults):
    return IndicatorDef(func, defaults, tuple(outputs), kind, needs_volume)


REGISTRY: dict[str, IndicatorDef] = {
    "APO": _d(_ind_apo, ["apo"], "momentum", fast=12, slow=26),
    "AROON": _d(_ind_aroon, ["aroon_up", "aroon_down"], "momentum", period=14),
    "AROONOSC": _d(_ind_aroonosc, ["aroonosc"], "momentum", period=14),
    "MAMA": _d(_ind_mama, ["mama", "fama"], "overlap", fast_limit=0.5, slow_limit=0.05),
    "ADX": _d(_ind_adx, ["adx"], "momentum", period=14),
    "ADXR": _d(_ind_adxr, ["adxr"], "momentum", period=14),
    "ATR": _d(_ind_atr, ["atr"], "volatility", period=14),
    "BOP": _d(_ind_bop, ["bop"], "momentum"),
    "BBANDS": _d(_ind_bbands, ["bb_upper", "bb_middle", "bb_lower"], "overlap", period=20, nbdev=2.0),
    "BBW": _d(_ind_bbw, ["bbw"], "overlap", period=20, nbdev=2.0),
    "PCTB": _d(_ind_pctb, ["pctb"], "overlap", period=20, nbdev=2.0),
    "ADOSC": _d(_ind_adosc, ["adosc"], "volume", needs_volume=True, fast=3, slow=10),
    "CMO": _d(_ind_cmo, ["cmo"], "momentum", period=14),
    "CCI": _d(_ind_cci, ["cci"], "momentum", period=14),
    "DX": _d(_ind_dx, ["dx"], "momentum", period=14),
    "DEMA": _d(_ind_dema, ["dema"], "overlap", period=30),
    "EMA": _d(_ind_ema, ["ema"], "overlap", period=30),
    "KAMA": _d(_ind_kama, ["kama"], "overlap", period=10, fast=2, slow=30),
    "MINMAX": _d(_ind_minmax, ["min", "max"], "other", period=30),
    "SMA": _d(_ind_sma, ["sma"], "overlap", period=30),
    "MACD": _d(_ind_macd, ["macd", "macd_signal", "macd_hist"], "momentum", fast=12, slow=26, signal=9),
    "MOM": _d(_ind_mom, ["mom"], "momentum", period=10),
    "MFI": _d(_ind_mfi, ["mfi"], "momentum", needs_volume=True, period=14),
    "OBV": _d(_ind_obv, ["obv"], "volume", needs_volume=True),
    "PPO": _d(_ind_ppo, ["ppo"], "momentum", fast=12, slow=26),
    "PLUS_DI": _d(_ind_plus_di, ["plus_di"], "momentum", period=14),
    "PLUS_DM": _d(_ind_plus_dm, ["plus_dm"], "momentum", period=14),
    "RSI": _d(_ind_rsi, ["rsi"], "momentum", period=14),
    "RVI": _d(_ind_rvi, ["rvi"], "momentum", period=10),
    "ROC": _d(_ind_roc, ["roc"], "momentum", period=10),
    "SAR": _d(_ind_sar, ["sar"], "overlap", acceleration=0.02, maximum=0.2),
    "STOCH": _d(_ind_stoch, ["stoch_k", "stoch_d"], "momentum", k_period=14, d_period=3),
    "TEMA": _d(_ind_tema, ["tema"], "overlap", period=30),
    "TRIMA": _d(_ind_trima, ["trima"], "overlap", period=30),
    "TRIX": _d(_ind_trix, ["trix"], "momentum", period=30),
    "ULTOSC": _d(_ind_ultosc, ["ultosc"], "momentum", fast=7, medium=14, slow=28),
    "WMA": _d(_ind_wma, ["wma"], "overlap", period=30),
    "WILLR": _d(_ind_willr, ["willr"], "momentum", period=14),
}

_FLOAT_PARAMS = {"nbdev", "acceleration", "maximum", "fast_limit", "slow_limit"}
_ORDERED_PAIRS = (("fast", "slow"), ("fast", "medium"), ("medium", "slow"), ("slow_limit", "fast_limit"),
                  ("acceleration", "maximum"))


@dataclass(frozen=True)
class IndicatorSpec:
    """A registered indicator name plus parameter overrides."""

    name: str
    params: Mapping[str, float] = field(default_factory=dict)

    def resolved(self) -> dict[str, float]:
        """Defaults merged with overrides, validated."""
        try:
            d = REGISTRY[self.name]
        except KeyError:
            raise IndicatorError(f"unknown indicator {self.name!r}") from None
        unknown = set(self.params) - set(d.defaults)
        if unknown:
            raise IndicatorError(f"{self.name}: unknown parameter(s) {', '.join(sorted(unknown))}")
        params = dict(d.defaults)
        for key, value in self.params.items():
            if key in _FLOAT_PARAMS:
                value = float(value)
                if not (math.isfinite(value) and value > 0):
                    raise IndicatorError(f"{self.name}: {key} must be positive, got {value}")
            else:
                if float(value) != int(value):
                    raise IndicatorError(f"{self.name}: {key} must be an integer, got {value}")
                value = int(value)
                if value < 1:
                    raise IndicatorError(f"{self.name}: {key} must be >= 1, got {value}")
            params[key] = value
        for lo, hi in _ORDERED_PAIRS:
            if lo in params and hi in params and not params[lo] < params[hi]:
                if (lo, hi) == ("acceleration", "maximum") and params[lo] == params[hi]:
                    continue
                raise IndicatorError(f"{self.name}: {lo} must be below {hi}")
        if "fast_limit" in params and params["fast_limit"] > 1:
            raise IndicatorError(f"{self.name}: fast_limit must be <= 1")
        return params

    def column_names(self) -> list[str]:
        d = REGISTRY[self.name]
        params = self.resolved()
        suffix = []
        if d.parametric:
            suffix.append(_fmt(params["period"]))
        suffix += [_fmt(v) for k, v in params.items() if k != "period" and v != d.defaults[k]]
        return ["_".join([out] + suffix) for out in d.outputs]

    def __str__(self) -> str:
        if not self.params:
            return self.name
        return f"{self.name}({','.join(f'{k}={_fmt(v)}' for k, v in self.params.items())})"


def _fmt(v) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def compute_indicator(spec: IndicatorSpec, bars: BarSeries) -> FeatureMatrix:
    """Evaluate one indicator; multi-output indicators yield one column per output."""
    params = spec.resolved()
    d = REGISTRY[spec.name]
    if d.needs_volume and not bars.has_volume:
        raise IndicatorError(f"{spec.name} needs volume but the series has none")
    raw = d.func(bars, **params)
    names = spec.column_names()
    cols = {}
    for name, out in zip(names, d.outputs):
        arr = np.asarray(raw[out], dtype=float)
        if not np.isfinite(arr).any():
            raise IndicatorError(
                f"{spec}: series of length {len(bars)} is too short for its warm-up"
            )
        cols[name] = arr
    return FeatureMatrix.from_columns(cols, bars.dates)


def build_crossover_features(
    fast_periods: Sequence[int], slow_periods: Sequence[int], bars: BarSeries
) -> FeatureMatrix:
    """Signed SMA differences ``SMA_fast - SMA_slow`` for every (fast, slow) pair."""
    fast_periods, slow_periods = list(fast_periods), list(slow_periods)
    if not fast_periods or not slow_periods:
        raise IndicatorError("fast and slow period lists must be non-empty")
    if min(fast_periods + slow_periods) < 1:
        raise IndicatorError("periods must be >= 1")
    if max(fast_periods) >= min(slow_periods):
        raise IndicatorError("every fast period must be shorter than every slow period")
    if max(slow_periods) > len(bars):
        raise IndicatorError(f"slow period {max(slow_periods)} exceeds series length {len(bars)}")
    fast = {f: _sma(bars.close, f) for f in dict.fromkeys(fast_periods)}
    slow = {s: _sma(bars.close, s) for s in dict.fromkeys(slow_periods)}
    cols = {f"xover_{f}_{s}": fast[f] - slow[s] for f in fast for s in slow}
    return FeatureMatrix.from_columns(cols, bars.dates)


DEFAULT_FAST_PERIODS = tuple(range(5, 16))
DEFAULT_SLOW_PERIODS = tuple(range(20, 31))
SWEEP_PERIODS = (3, 14, 30)


def default_manifest() -> list[IndicatorSpec]:
    """Every registered indicator: period-parametric ones at 3, 14 and 30, the rest once."""
    specs = []
    for name, d in REGISTRY.items():
        if d.parametric:
            specs += [IndicatorSpec(name, {"period": p}) for p in SWEEP_PERIODS]
        else:
            specs.append(IndicatorSpec(name))
    return specs


# default_manifest() columns plus adj_close and volume
DEFAULT_MANIFEST_COLUMNS = 112


def build_indicator_matrix(
    manifest: Sequence[IndicatorSpec], bars: BarSeries, include_price_volume: bool = True
) -> FeatureMatrix:
    if not manifest:
        raise IndicatorError("manifest is empty")
    for spec in manifest:
        spec.resolved()
        if REGISTRY[spec.name].needs_volume and not bars.has_volume:
            raise IndicatorError(f"{spec.name} needs volume but the series has none")
    names = [n for spec in manifest for n in spec.column_names()]
    if include_price_volume:
        names += ["adj_close", "volume"]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise IndicatorError(f"manifest yields duplicate columns: {', '.join(dupes)}")
    parts = [compute_indicator(spec, bars) for spec in manifest]
    if include_price_volume:
        parts.append(FeatureMatrix.from_columns(
            {"adj_close": bars.adj_close, "volume": bars.volume}, bars.dates))
    return concat_features(parts)


_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?$")


def parse_manifest(text: str) -> list[IndicatorSpec]:
    """Parse ``NAME(key=value, ...)`` lines; ``#`` starts a comment."""
    specs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise IndicatorError(f"manifest line {lineno}: cannot parse {raw.strip()!r}")
        params = {}
        if m.group(2) and m.group(2).strip():
            for item in m.group(2).split(","):
                key, sep, value = item.partition("=")
                if not sep:
                    raise IndicatorError(f"manifest line {lineno}: expected key=value, got {item.strip()!r}")
                try:
                    num = float(value)
                except ValueError:
                    raise IndicatorError(f"manifest line {lineno}: bad value {value.strip()!r}") from None
                params[key.strip()] = int(num) if num.is_integer() and "." not in value else num
        spec = IndicatorSpec(m.group(1).upper(), params)
        try:
            spec.resolved()
        except IndicatorError as exc:
            raise IndicatorError(f"manifest line {lineno}: {exc}") from None
        specs.append(spec)
    return specs


def render_manifest(specs: Iterable[IndicatorSpec]) -> str:
    return "".join(f"{s}\n" for s in specs)


def drop_warmup(features: FeatureMatrix, labels: LabelSeries) -> tuple[np.ndarray, LabelSeries]:
    """Keep rows with every feature valid and a known label, in order."""
    if len(labels) != features.shape[0]:
        raise IndicatorError(f"{features.shape[0]} feature rows vs {len(labels)} labels")
    if labels.timestamps is not None and not np.array_equal(labels.timestamps, features.timestamps):
        raise IndicatorError("features and labels are not aligned on timestamps")
    keep = features.row_valid & (labels.labels != 0)
    if not keep.any():
        raise IndicatorError("no row has both valid features and a known label")
    return features.values[keep].copy(), labels.take(np.flatnonzero(keep))
