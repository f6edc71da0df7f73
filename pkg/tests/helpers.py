import numpy as np

from trendlab.market_data import BarSeries

from oracles import random_bars


def make_bars(close, open_=None, high=None, low=None, volume=None):
    """BarSeries on consecutive days; missing fields default to the close."""
    close = np.asarray(close, dtype=float)
    open_ = close if open_ is None else np.asarray(open_, dtype=float)
    high = np.maximum(open_, close) if high is None else np.asarray(high, dtype=float)
    low = np.minimum(open_, close) if low is None else np.asarray(low, dtype=float)
    volume = np.zeros_like(close) if volume is None else np.asarray(volume, dtype=float)
    dates = np.datetime64("2010-01-01") + np.arange(len(close))
    return BarSeries(dates, open_, high, low, close, close.copy(), volume)


def random_series(n=200, seed=0):
    o, h, l, c, v = random_bars(n, seed)
    return make_bars(c, o, h, l, v)
