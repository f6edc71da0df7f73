"""Bernoulli restricted Boltzmann machine trained with persistent contrastive divergence.

Visible units take values in [0, 1], read as probabilities of being on.
With ``W`` of shape ``(n, m)``::

    P(h_j = 1 | v) = sigmoid(b_j + sum_i v_i W_ij)
    P(v_i = 1 | h) = sigmoid(a_i + sum_j W_ij h_j)
    E(v, h) = -a.v - b.h - v.W.h
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .errors import ModelError
from .training import EarlyStopping, TrainHistory, check_schedule, check_unit_data, minibatches

FORMAT_VERSION = 1
MAX_ENUMERATION_UNITS = 20


@dataclass(eq=False)
class RbmModel:
    W: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = np.array(self.W, dtype=float, ndmin=2)
        self.a = np.array(self.a, dtype=float).reshape(-1)
        self.b = np.array(self.b, dtype=float).reshape(-1)
        if self.W.shape != (self.a.size, self.b.size):
            raise ModelError(f"W has shape {self.W.shape}, biases imply {(self.a.size, self.b.size)}")
        if not all(np.all(np.isfinite(x)) for x in (self.W, self.a, self.b)):
            raise ModelError("RBM parameters must be finite")

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def m(self) -> int:
        return self.b.size

    def copy(self) -> "RbmModel":
        return RbmModel(self.W.copy(), self.a.copy(), self.b.copy())

    def params_equal(self, other: "RbmModel") -> bool:
        return all(np.array_equal(x, y) for x, y in ((self.W, other.W), (self.a, other.a), (self.b, other.b)))

    def to_json(self) -> str:
        return json.dumps({
            "format_version": FORMAT_VERSION,
            "n": self.n,
            "m": self.m,
            "W": self.W.reshape(-1).tolist(),
            "a": self.a.tolist(),
            "b": self.b.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "RbmModel":
        doc = json.loads(text)
        if doc.get("format_version") != FORMAT_VERSION:
            raise ModelError(f"unsupported RBM format_version {doc.get('format_version')!r}")
        n, m = doc["n"], doc["m"]
        return cls(np.array(doc["W"], dtype=float).reshape(n, m), doc["a"], doc["b"])


@dataclass(frozen=True)
class RbmTrainConfig:
    learning_rate: float = 0.05
    decay_rate: float = 0.97
    batch_size: int = 32
    max_epochs: int = 300
    gibbs_steps: int = 1
    patience: int = 20
    seed: int = 0

    def __post_init__(self):
        check_schedule(self.learning_rate, self.decay_rate, self.batch_size, self.max_epochs, self.patience)
        if int(self.gibbs_steps) != self.gibbs_steps or self.gibbs_steps < 1:
            raise ModelError(f"gibbs_steps must be a positive integer, got {self.gibbs_steps}")


def init_rbm(n: int, m: int, seed: int) -> RbmModel:
    """Weights i.i.d. N(0, 0.01**2), zero biases."""
    if n < 1 or m < 1:
        raise ModelError(f"RBM needs n, m >= 1, got n={n}, m={m}")
    rng = np.random.default_rng(seed)
    return RbmModel(rng.normal(0.0, 0.01, size=(n, m)), np.zeros(n), np.zeros(m))


def _rows(x, width: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != width:
        raise ModelError(f"{what} has {x.shape[-1]} entries, expected {width}")
    return x


def hidden_probs(model: RbmModel, v) -> np.ndarray:
    """``P(H=1 | v)`` for a vector or a batch of rows."""
    v = _rows(v, model.n, "visible vector")
    return expit(model.b + v @ model.W)


def visible_probs(model: RbmModel, h) -> np.ndarray:
    """``P(V=1 | h)`` for a vector or a batch of rows."""
    h = _rows(h, model.m, "hidden vector")
    return expit(model.a + h @ model.W.T)


def sample_hidden(model: RbmModel, v, rng: np.random.Generator) -> np.ndarray:
    p = hidden_probs(model, v)
    return (rng.random(p.shape) < p).astype(float)


def sample_visible(model: RbmModel, h, rng: np.random.Generator) -> np.ndarray:
    p = visible_probs(model, h)
    return (rng.random(p.shape) < p).astype(float)


def _check_binary(x, what):
    if not np.all((x == 0) | (x == 1)):
        raise ModelError(f"{what} must be binary")


def energy(model: RbmModel, v, h) -> float | np.ndarray:
    v = _rows(v, model.n, "visible vector")
    h = _rows(h, model.m, "hidden vector")
    _check_binary(v, "v")
    _check_binary(h, "h")
    return -(v @ model.a) - (h @ model.b) - np.einsum("...i,ij,...j->...", v, model.W, h)


def all_binary_states(k: int) -> np.ndarray:
    """The ``2**k`` binary vectors of length ``k``, in lexicographic order."""
    return np.array(list(itertools.product((0.0, 1.0), repeat=k))).reshape(2**k, k)


def exact_log_likelihood(model: RbmModel, data) -> float:
    """Mean ``log P(v)`` over binary rows, with ``Z`` summed over all joint states."""
    if model.n + model.m > MAX_ENUMERATION_UNITS:
        raise ModelError(
            f"exact likelihood enumerates 2**(n+m) states; n+m={model.n + model.m} "
            f"exceeds {MAX_ENUMERATION_UNITS}"
        )
    data = np.atleast_2d(_rows(data, model.n, "data row"))
    _check_binary(data, "data")
    V = all_binary_states(model.n)
    H = all_binary_states(model.m)
    neg_e = (V @ model.a)[:, None] + (H @ model.b)[None, :] + V @ model.W @ H.T
    # unnormalised log P(v), shifted by its max before normalising; a uniform
    # model then yields exactly -log(2**n)
    log_marg = logsumexp(neg_e, axis=1)
    log_marg = log_marg - log_marg.max()
    log_pv = log_marg - logsumexp(log_marg)
    idx = (data @ (2 ** np.arange(model.n - 1, -1, -1))).astype(int)
    return float(np.mean(log_pv[idx]))


def gibbs_chains(model: RbmModel, chains: np.ndarray, k: int, rng: np.random.Generator):
    """Advance binary visible chains by ``k`` full Gibbs sweeps.

    Returns ``(new_chains, v_prob, h_sample)`` where ``h_sample`` is the last
    hidden draw and ``v_prob = P(V=1 | h_sample)``; ``v_prob * h_sample``
    is an unbiased estimate of the model's ``E[v h]``.
    """
    v = chains
    for _ in range(k):
        h = sample_hidden(model, v, rng)
        v_prob = visible_probs(model, h)
        v = (rng.random(v_prob.shape) < v_prob).astype(float)
    return v, v_prob, h


def pcd_gradient(model: RbmModel, v_data: np.ndarray, chains: np.ndarray, k: int,
                 rng: np.random.Generator):
    """Log-likelihood ascent direction from data rows and persistent chains.

    Positive phase uses the rows as visible probabilities; the negative
    phase uses visible probabilities paired with sampled hiddens.
    Returns ``((dW, da, db), new_chains)``.
    """
    h_data = hidden_probs(model, v_data)
    chains, v_neg, h_neg = gibbs_chains(model, chains, k, rng)
    dW = v_data.T @ h_data / len(v_data) - v_neg.T @ h_neg / len(v_neg)
    da = v_data.mean(axis=0) - v_neg.mean(axis=0)
    db = h_data.mean(axis=0) - h_neg.mean(axis=0)
    return (dW, da, db), chains


def reconstruction_cross_entropy(model: RbmModel, data) -> float:
    """Mean over rows of the cross-entropy between ``v`` and ``P(V | P(H | v))``."""
    pre = model.a + hidden_probs(model, data) @ model.W.T
    # log sigmoid(x) = -logaddexp(0, -x)
    ce = data * np.logaddexp(0.0, -pre) + (1.0 - data) * np.logaddexp(0.0, pre)
    return float(ce.sum(axis=1).mean())


def train_pcd(model: RbmModel, data, config: RbmTrainConfig = RbmTrainConfig()):
    """Train by persistent contrastive divergence; returns ``(model, history)``.

    The input model is not modified. The learning rate at epoch ``e`` is
    ``learning_rate * decay_rate**e``. Training stops after ``max_epochs`` or
    once the reconstruction cross-entropy on ``data`` has not improved for
    ``patience`` epochs; the best-scoring parameters are returned.
    """
    data = check_unit_data(data, model.n)
    rng = np.random.default_rng(config.seed)
    model = model.copy()
    history = TrainHistory()
    stopper = EarlyStopping(config.patience)
    stopper.update(-1, reconstruction_cross_entropy(model, data), model.copy())

    chains = None
    for epoch in range(config.max_epochs):
        start = time.perf_counter()
        lr = config.learning_rate * config.decay_rate**epoch
        for batch in minibatches(len(data), config.batch_size, rng):
            v = data[batch]
            if chains is None:
                chains = (rng.random(v.shape) < v).astype(float)
            (dW, da, db), chains = pcd_gradient(model, v, chains, config.gibbs_steps, rng)
            model.W += lr * dW
            model.a += lr * da
            model.b += lr * db
        loss = reconstruction_cross_entropy(model, data)
        history.record(loss, lr, time.perf_counter() - start)
        if not np.all(np.isfinite(model.W)):
            raise ModelError(f"RBM training diverged at epoch {epoch}; lower the learning rate")
        if stopper.update(epoch, loss, model.copy()):
            history.stopped_early = True
            break
    history.best_epoch = stopper.best_epoch
    return stopper.snapshot, history


def encode(model: RbmModel, features) -> np.ndarray:
    """Deterministic code: hidden probabilities row by row."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    return hidden_probs(model, features)
