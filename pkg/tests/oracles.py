"""Independent reference implementations used as test oracles.

Everything here is written with explicit Python loops straight from the
textbook definitions and shares no code with the package, so agreement is
evidence of correctness rather than of a shared bug.
"""

import itertools
import math

import numpy as np


def random_bars(n, seed):
    """Random OHLCV arrays with consistent high/low bounds."""
    rng = np.random.default_rng(seed)
    close = 100.0 * np.exp(np.cumsum(rng.normal(0, 0.02, n)))
    open_ = close * np.exp(rng.normal(0, 0.01, n))
    high = np.maximum(open_, close) * np.exp(np.abs(rng.normal(0, 0.01, n)))
    low = np.minimum(open_, close) * np.exp(-np.abs(rng.normal(0, 0.01, n)))
    volume = rng.uniform(1e5, 1e6, n)
    return open_, high, low, close, volume


def _nan(n):
    return [math.nan] * n


# ---------------------------------------------------------------- averages


def sma(x, n):
    out = _nan(len(x))
    for t in range(n - 1, len(x)):
        window = x[t - n + 1:t + 1]
        if any(math.isnan(v) for v in window):
            continue
        out[t] = math.fsum(window) / n
    return out


def ema(x, n, alpha=None):
    """Seeded with the mean of the first ``n`` defined values."""
    alpha = 2.0 / (n + 1) if alpha is None else alpha
    out = _nan(len(x))
    start = next((i for i, v in enumerate(x) if not math.isnan(v)), len(x))
    if start + n > len(x):
        return out
    prev = math.fsum(x[start:start + n]) / n
    out[start + n - 1] = prev
    for t in range(start + n, len(x)):
        prev = alpha * x[t] + (1 - alpha) * prev
        out[t] = prev
    return out


def wilder(x, n):
    return ema(x, n, alpha=1.0 / n)


def wma(x, n):
    out = _nan(len(x))
    denom = n * (n + 1) / 2
    for t in range(n - 1, len(x)):
        out[t] = sum((k + 1) * x[t - n + 1 + k] for k in range(n)) / denom
    return out


def _combine(*terms):
    """Sum of ``coef * series`` terms, NaN wherever any term is NaN."""
    T = len(terms[0][1])
    return [sum(c * s[t] for c, s in terms) for t in range(T)]


def dema(x, n):
    e1 = ema(x, n)
    return _combine((2, e1), (-1, ema(e1, n)))


def tema(x, n):
    e1 = ema(x, n)
    e2 = ema(e1, n)
    return _combine((3, e1), (-3, e2), (1, ema(e2, n)))


def trima(x, n):
    n1, n2 = ((n + 1) // 2, (n + 1) // 2) if n % 2 else (n // 2, n // 2 + 1)
    return sma(sma(x, n1), n2)


# ---------------------------------------------------------------- momentum


def mom(c, n):
    return [c[t] - c[t - n] if t >= n else math.nan for t in range(len(c))]


def roc(c, n):
    return [c[t] / c[t - n] if t >= n else math.nan for t in range(len(c))]


def rsi(c, n):
    gains = [math.nan] + [max(c[t] - c[t - 1], 0.0) for t in range(1, len(c))]
    losses = [math.nan] + [max(c[t - 1] - c[t], 0.0) for t in range(1, len(c))]
    ag, al = wilder(gains, n), wilder(losses, n)
    return [100.0 * g / (g + l) if not math.isnan(g) else math.nan for g, l in zip(ag, al)]


def cmo(c, n):
    out = _nan(len(c))
    for t in range(n, len(c)):
        moves = [c[s] - c[s - 1] for s in range(t - n + 1, t + 1)]
        up = sum(m for m in moves if m > 0)
        down = sum(-m for m in moves if m < 0)
        out[t] = 100.0 * (up - down) / (up + down)
    return out


def willr(h, l, c, n):
    out = _nan(len(c))
    for t in range(n - 1, len(c)):
        hh = max(h[t - n + 1:t + 1])
        ll = min(l[t - n + 1:t + 1])
        out[t] = -100.0 * (hh - c[t]) / (hh - ll)
    return out


def stoch(h, l, c, k_period=14, d_period=3):
    k = _nan(len(c))
    for t in range(k_period - 1, len(c)):
        hh = max(h[t - k_period + 1:t + 1])
        ll = min(l[t - k_period + 1:t + 1])
        k[t] = 100.0 * (c[t] - ll) / (hh - ll)
    return k, sma(k, d_period)


def apo(c, fast=12, slow=26):
    return _combine((1, ema(c, fast)), (-1, ema(c, slow)))


def ppo(c, fast=12, slow=26):
    f, s = ema(c, fast), ema(c, slow)
    return [100.0 * (a - b) / b for a, b in zip(f, s)]


def cci(h, l, c, n):
    tp = [(h[t] + l[t] + c[t]) / 3.0 for t in range(len(c))]
    out = _nan(len(c))
    for t in range(n - 1, len(c)):
        window = tp[t - n + 1:t + 1]
        mean = sum(window) / n
        mad = sum(abs(v - mean) for v in window) / n
        out[t] = (tp[t] - mean) / (0.015 * mad)
    return out


# ---------------------------------------------------------------- volatility


def bbands(c, n, k=2.0):
    upper, middle, lower = _nan(len(c)), _nan(len(c)), _nan(len(c))
    for t in range(n - 1, len(c)):
        window = c[t - n + 1:t + 1]
        mean = sum(window) / n
        sd = math.sqrt(sum((v - mean) ** 2 for v in window) / n)
        upper[t], middle[t], lower[t] = mean + k * sd, mean, mean - k * sd
    return upper, middle, lower


def bbw(c, n, k=2.0):
    u, m, lo = bbands(c, n, k)
    return [(a - b) / mid for a, b, mid in zip(u, lo, m)]


def pctb(c, n, k=2.0):
    u, _, lo = bbands(c, n, k)
    return [(x - b) / (a - b) for x, a, b in zip(c, u, lo)]


def true_range(h, l, c):
    return [math.nan] + [
        max(h[t] - l[t], abs(h[t] - c[t - 1]), abs(l[t] - c[t - 1])) for t in range(1, len(c))
    ]


def atr(h, l, c, n):
    return wilder(true_range(h, l, c), n)


# ---------------------------------------------------------------- volume


def obv(c, v):
    out = [v[0]]
    for t in range(1, len(c)):
        if c[t] > c[t - 1]:
            out.append(out[-1] + v[t])
        elif c[t] < c[t - 1]:
            out.append(out[-1] - v[t])
        else:
            out.append(out[-1])
    return out


def mfi(h, l, c, v, n):
    tp = [(h[t] + l[t] + c[t]) / 3.0 for t in range(len(c))]
    out = _nan(len(c))
    for t in range(n, len(c)):
        pos = neg = 0.0
        for s in range(t - n + 1, t + 1):
            flow = tp[s] * v[s]
            if tp[s] > tp[s - 1]:
                pos += flow
            elif tp[s] < tp[s - 1]:
                neg += flow
        out[t] = 100.0 * pos / (pos + neg)
    return out


# ---------------------------------------------------------------- labels


def brute_force_labels(close):
    """Trend labels recomputing every 7-point window from scratch."""
    T = len(close)

    def cma(t):
        if t < 3 or t > T - 4:
            return None
        return sum(close[t - 3:t + 4]) / 7.0

    labels = []
    prev = 0
    for t in range(T):
        now, lead1, lead3 = cma(t), cma(t + 1), cma(t + 3)
        fired = 0
        if now is not None and lead1 is not None and lead3 is not None:
            if now > close[t] and lead3 > lead1:
                fired = 1
            elif now < close[t] and lead3 < lead1:
                fired = -1
        prev = fired or prev
        labels.append(prev)
    return labels


# ---------------------------------------------------------------- RBM


def rbm_joint_table(W, a, b):
    """Every (v, h) state with its Gibbs probability, by explicit enumeration."""
    n, m = W.shape
    states = []
    for v in itertools.product((0, 1), repeat=n):
        for h in itertools.product((0, 1), repeat=m):
            e = -sum(a[i] * v[i] for i in range(n)) - sum(b[j] * h[j] for j in range(m))
            e -= sum(v[i] * W[i, j] * h[j] for i in range(n) for j in range(m))
            states.append((v, h, math.exp(-e)))
    z = math.fsum(w for _, _, w in states)
    return [(np.array(v, float), np.array(h, float), w / z) for v, h, w in states]


def rbm_exact_gradient(W, a, b, data):
    """Exact log-likelihood gradient: data term minus model expectation."""
    n, m = W.shape
    table = rbm_joint_table(W, a, b)
    model_vh = sum(p * np.outer(v, h) for v, h, p in table)
    model_v = sum(p * v for v, _, p in table)
    model_h = sum(p * h for _, h, p in table)
    ph = 1.0 / (1.0 + np.exp(-(b + data @ W)))
    data_vh = data.T @ ph / len(data)
    return data_vh - model_vh, data.mean(axis=0) - model_v, ph.mean(axis=0) - model_h


def rbm_hidden_conditional(W, a, b, v):
    """``P(h_j = 1 | v)`` by summing the joint table over matching states."""
    table = rbm_joint_table(W, a, b)
    match = [(h, p) for vv, h, p in table if np.array_equal(vv, v)]
    pv = sum(p for _, p in match)
    return sum(p * h for h, p in match) / pv


def rbm_log_marginal(W, a, b, v):
    table = rbm_joint_table(W, a, b)
    pv = sum(p for vv, _, p in table if np.array_equal(vv, v))
    return math.log(pv)


# ---------------------------------------------------------------- auto-encoder


def ae_mean_loss(W, b, Wp, bp, x_in, x_target, kind):
    """Mean per-row loss of the sigmoid auto-encoder, written out directly."""
    total = 0.0
    for xi, xt in zip(x_in, x_target):
        y = 1.0 / (1.0 + np.exp(-(W @ xi + b)))
        z = 1.0 / (1.0 + np.exp(-(Wp @ y + bp)))
        if kind == "squared":
            total += float(np.sum((xt - z) ** 2))
        else:
            total += float(-np.sum(xt * np.log(z) + (1 - xt) * np.log(1 - z)))
    return total / len(x_in)


def central_difference(f, params, step=1e-6):
    """Central finite-difference gradient of ``f()`` w.r.t. each array in ``params``."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + step
            up = f()
            p[idx] = orig - step
            down = f()
            p[idx] = orig
            g[idx] = (up - down) / (2 * step)
        grads.append(g)
    return grads


# ---------------------------------------------------------------- SVM


def svm_kkt_residual(K, y, alpha, bias, C):
    """Largest violation of the soft-margin KKT conditions.

    With ``f_i = y_i (sum_j alpha_j y_j K_ij + bias)``: ``alpha_i = 0`` needs
    ``f_i >= 1``, ``0 < alpha_i < C`` needs ``f_i = 1``, ``alpha_i = C`` needs
    ``f_i <= 1``.
    """
    f = y * (K @ (alpha * y) + bias)
    worst = 0.0
    for fi, ai in zip(f, alpha):
        if ai <= 0:
            v = max(0.0, 1 - fi)
        elif ai >= C:
            v = max(0.0, fi - 1)
        else:
            v = abs(fi - 1)
        worst = max(worst, v)
    return worst
