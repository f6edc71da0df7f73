"""Plumbing shared by the RBM and auto-encoder trainers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError


@dataclass
class TrainHistory:
    """Per-epoch monitoring record; one entry per completed epoch."""

    loss: list[float] = field(default_factory=list)
    learning_rate: list[float] = field(default_factory=list)
    wall_time: list[float] = field(default_factory=list)
    best_epoch: int = -1
    stopped_early: bool = False

    def __len__(self) -> int:
        return len(self.loss)

    def record(self, loss: float, lr: float, seconds: float) -> None:
        self.loss.append(float(loss))
        self.learning_rate.append(float(lr))
        self.wall_time.append(float(seconds))


def check_unit_data(data, n_columns: int | None = None) -> np.ndarray:
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.ndim != 2 or data.shape[0] == 0:
        raise ModelError("training data is empty")
    if n_columns is not None and data.shape[1] != n_columns:
        raise ModelError(f"data has {data.shape[1]} columns, model expects {n_columns}")
    if not np.all(np.isfinite(data)) or data.min() < 0 or data.max() > 1:
        raise ModelError("training data must lie in [0, 1]")
    return data


def check_schedule(learning_rate, decay_rate, batch_size, max_epochs, patience) -> None:
    if not learning_rate >= 0:
        raise ModelError(f"learning_rate must be >= 0, got {learning_rate}")
    if not 0 < decay_rate <= 1:
        raise ModelError(f"decay_rate must lie in (0, 1], got {decay_rate}")
    for name, value in (("batch_size", batch_size), ("max_epochs", max_epochs), ("patience", patience)):
        if int(value) != value or value < 1:
            raise ModelError(f"{name} must be a positive integer, got {value}")


def minibatches(n_rows: int, batch_size: int, rng: np.random.Generator):
    """Index arrays of one shuffled pass; the last batch may be short."""
    order = rng.permutation(n_rows)
    return [order[i:i + batch_size] for i in range(0, n_rows, batch_size)]


class EarlyStopping:
    """Tracks the best monitored loss and a snapshot of the parameters that produced it."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = np.inf
        self.best_epoch = -1
        self.snapshot = None
        self._wait = 0

    def update(self, epoch: int, loss: float, params) -> bool:
        """Record an epoch; return True when training should stop."""
        if loss < self.best:
            self.best, self.best_epoch, self._wait = loss, epoch, 0
            self.snapshot = params
            return False
        self._wait += 1
        return self._wait >= self.patience
