"""Single-hidden-layer denoising auto-encoder with sigmoid units.

``y = sigmoid(W x + b)`` encodes, ``z = sigmoid(W' y + b')`` decodes. ``W``
and ``W'`` are untied: ``W'`` starts as ``W.T`` and is trained on its own.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ModelError
from .training import EarlyStopping, TrainHistory, check_schedule, check_unit_data, minibatches

FORMAT_VERSION = 1
LOSSES = ("cross_entropy", "squared")


@dataclass(eq=False)
class AeModel:
    W: np.ndarray
    b: np.ndarray
    W_prime: np.ndarray
    b_prime: np.ndarray

    def __post_init__(self):
        self.W = np.array(self.W, dtype=float, ndmin=2)
        self.b = np.array(self.b, dtype=float).reshape(-1)
        self.W_prime = np.array(self.W_prime, dtype=float, ndmin=2)
        self.b_prime = np.array(self.b_prime, dtype=float).reshape(-1)
        p, d = self.W.shape
        if self.b.size != p or self.W_prime.shape != (d, p) or self.b_prime.size != d:
            raise ModelError("inconsistent auto-encoder parameter shapes")
        if p >= d:
            raise ModelError(f"code size {p} must be smaller than input size {d}")
        if not all(np.all(np.isfinite(x)) for x in self.params()):
            raise ModelError("auto-encoder parameters must be finite")

    @property
    def d(self) -> int:
        return self.W.shape[1]

    @property
    def p(self) -> int:
        return self.W.shape[0]

    def params(self) -> tuple[np.ndarray, ...]:
        return self.W, self.b, self.W_prime, self.b_prime

    def copy(self) -> "AeModel":
        return AeModel(*(x.copy() for x in self.params()))

    def params_equal(self, other: "AeModel") -> bool:
        return all(np.array_equal(x, y) for x, y in zip(self.params(), other.params()))

    def to_json(self) -> str:
        return json.dumps({
            "format_version": FORMAT_VERSION,
            "d": self.d,
            "p": self.p,
            "W": self.W.tolist(),
            "b": self.b.tolist(),
            "W_prime": self.W_prime.tolist(),
            "b_prime": self.b_prime.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "AeModel":
        doc = json.loads(text)
        if doc.get("format_version") != FORMAT_VERSION:
            raise ModelError(f"unsupported auto-encoder format_version {doc.get('format_version')!r}")
        return cls(doc["W"], doc["b"], doc["W_prime"], doc["b_prime"])


@dataclass(frozen=True)
class AeTrainConfig:
    learning_rate: float = 0.1
    decay_rate: float = 0.97
    batch_size: int = 32
    max_epochs: int = 300
    patience: int = 20
    corruption_level: float = 0.1
    loss: str = "cross_entropy"
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        check_schedule(self.learning_rate, self.decay_rate, self.batch_size, self.max_epochs, self.patience)
        if not 0 <= self.corruption_level < 1:
            raise ModelError(f"corruption_level must lie in [0, 1), got {self.corruption_level}")
        if self.loss not in LOSSES:
            raise ModelError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if not 0 <= self.validation_fraction < 1:
            raise ModelError("validation_fraction must lie in [0, 1)")


def glorot_sigmoid_range(d: int, p: int) -> float:
    return 4.0 * math.sqrt(6.0 / (d + p))


def init_ae(d: int, p: int, seed: int) -> AeModel:
    """``W ~ U(-r, r)`` with ``r = 4*sqrt(6/(d+p))``, ``W' = W.T``, zero biases."""
    if not d > p >= 1:
        raise ModelError(f"auto-encoder needs d > p >= 1, got d={d}, p={p}")
    r = glorot_sigmoid_range(d, p)
    W = np.random.default_rng(seed).uniform(-r, r, size=(p, d))
    return AeModel(W, np.zeros(p), W.T.copy(), np.zeros(d))


def encode(model: AeModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.d:
        raise ModelError(f"input has {x.shape[-1]} entries, expected {model.d}")
    return expit(x @ model.W.T + model.b)


def decode(model: AeModel, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != model.p:
        raise ModelError(f"code has {y.shape[-1]} entries, expected {model.p}")
    return expit(y @ model.W_prime.T + model.b_prime)


def encode_matrix(model: AeModel, features) -> np.ndarray:
    return encode(model, np.atleast_2d(np.asarray(features, dtype=float)))


def loss(x, z, kind: str = "cross_entropy") -> float | np.ndarray:
    """Reconstruction loss summed over the last axis.

    ``squared``: ``||x - z||**2``; ``cross_entropy``:
    ``-sum(x log z + (1-x) log(1-z))``, requiring ``z`` strictly inside (0, 1).
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise ModelError(f"shape mismatch {x.shape} vs {z.shape}")
    if kind == "squared":
        return np.sum((x - z) ** 2, axis=-1)
    if kind != "cross_entropy":
        raise ModelError(f"unknown loss {kind!r}")
    if np.any((z <= 0) | (z >= 1)):
        raise ModelError("cross-entropy needs reconstructions strictly inside (0, 1)")
    return -np.sum(x * np.log(z) + (1 - x) * np.log1p(-z), axis=-1)


def _stable_loss(x, pre, kind):
    """Loss from the decoder pre-activation, finite even when ``z`` rounds to 0 or 1."""
    if kind == "squared":
        return np.sum((x - expit(pre)) ** 2, axis=-1)
    return np.sum(x * np.logaddexp(0.0, -pre) + (1 - x) * np.logaddexp(0.0, pre), axis=-1)


def corrupt(x, level: float, seed) -> np.ndarray:
    """Zero each entry independently with probability ``level``.

    ``seed`` is an integer or a ``numpy.random.Generator``.
    """
    if not 0 <= level < 1:
        raise ModelError(f"corruption level must lie in [0, 1), got {level}")
    x = np.asarray(x, dtype=float)
    if level == 0:
        return x.copy()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return np.where(rng.random(x.shape) < level, 0.0, x)


def gradients(model: AeModel, x_in, x_target, kind: str = "cross_entropy"):
    """Backpropagated gradients of the mean per-row loss.

    ``x_in`` is the (possibly corrupted) input, ``x_target`` the clean row the
    reconstruction is scored against. Returns ``(loss, (dW, db, dW', db'))``.
    """
    x_in = np.atleast_2d(x_in)
    x_target = np.atleast_2d(x_target)
    B = len(x_in)
    y = encode(model, x_in)
    pre = y @ model.W_prime.T + model.b_prime
    z = expit(pre)
    if kind == "cross_entropy":
        delta_out = z - x_target
    elif kind == "squared":
        delta_out = 2.0 * (z - x_target) * z * (1.0 - z)
    else:
        raise ModelError(f"unknown loss {kind!r}")
    delta_hidden = (delta_out @ model.W_prime) * y * (1.0 - y)
    grads = (
        delta_hidden.T @ x_in / B,
        delta_hidden.mean(axis=0),
        delta_out.T @ y / B,
        delta_out.mean(axis=0),
    )
    return float(np.mean(_stable_loss(x_target, pre, kind))), grads


def reconstruction_loss(model: AeModel, data, kind: str = "cross_entropy") -> float:
    """Mean per-row loss of the uncorrupted reconstruction."""
    data = np.atleast_2d(data)
    pre = encode(model, data) @ model.W_prime.T + model.b_prime
    return float(np.mean(_stable_loss(data, pre, kind)))


def train_ae(model: AeModel, data, config: AeTrainConfig = AeTrainConfig()):
    """Mini-batch SGD on corrupted inputs; returns ``(model, history)``.

    A seeded ``validation_fraction`` of the rows is held out for early
    stopping (the training rows are monitored when that slice would be
    empty). The best-scoring parameters are returned; the input model is
    left untouched.
    """
    data = check_unit_data(data, model.d)
    rng = np.random.default_rng(config.seed)
    n_val = int(math.floor(config.validation_fraction * len(data)))
    if n_val:
        perm = rng.permutation(len(data))
        train, val = data[np.sort(perm[n_val:])], data[np.sort(perm[:n_val])]
    else:
        train, val = data, data

    model = model.copy()
    history = TrainHistory()
    stopper = EarlyStopping(config.patience)
    stopper.update(-1, reconstruction_loss(model, val, config.loss), model.copy())
    for epoch in range(config.max_epochs):
        start = time.perf_counter()
        lr = config.learning_rate * config.decay_rate**epoch
        for batch in minibatches(len(train), config.batch_size, rng):
            x = train[batch]
            x_tilde = corrupt(x, config.corruption_level, rng)
            _, grads = gradients(model, x_tilde, x, config.loss)
            for param, g in zip(model.params(), grads):
                param -= lr * g
        val_loss = reconstruction_loss(model, val, config.loss)
        history.record(val_loss, lr, time.perf_counter() - start)
        if not np.isfinite(val_loss):
            raise ModelError(f"auto-encoder training diverged at epoch {epoch}")
        if stopper.update(epoch, val_loss, model.copy()):
            history.stopped_early = True
            break
    history.best_epoch = stopper.best_epoch
    return stopper.snapshot, history
