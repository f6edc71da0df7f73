"""Per-feature rescaling to the unit interval: min/max or empirical CDF."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import TrendlabError
from .indicators import FeatureMatrix

KINDS = ("minmax", "ecdf")


@dataclass(frozen=True, eq=False)
class ScalerModel:
    """Fitted scaler.

    ``state[j]`` is ``(min, max)`` for ``minmax`` and the ascending fitted
    sample of column ``j`` for ``ecdf``.
    """

    kind: str
    columns: tuple[str, ...]
    state: tuple

    def __eq__(self, other):
        if not isinstance(other, ScalerModel):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.columns == other.columns
            and all(np.array_equal(a, b) for a, b in zip(self.state, other.state))
        )

    def to_json(self) -> str:
        cols = {
            name: (
                {"min": float(s[0]), "max": float(s[1])}
                if self.kind == "minmax"
                else {"sample": [float(v) for v in s]}
            )
            for name, s in zip(self.columns, self.state)
        }
        return json.dumps({"kind": self.kind, "columns": cols})

    @classmethod
    def from_json(cls, text: str) -> "ScalerModel":
        doc = json.loads(text)
        kind = doc["kind"]
        if kind not in KINDS:
            raise TrendlabError(f"unknown scaler kind {kind!r}")
        names = tuple(doc["columns"])
        if kind == "minmax":
            state = tuple((c["min"], c["max"]) for c in doc["columns"].values())
        else:
            state = tuple(np.array(c["sample"], dtype=float) for c in doc["columns"].values())
        return cls(kind, names, state)


def _as_matrix(features, columns=None):
    if isinstance(features, FeatureMatrix):
        return features.values, features.valid, features.columns
    values = np.atleast_2d(np.asarray(features, dtype=float))
    if columns is None:
        columns = tuple(f"x{j}" for j in range(values.shape[1]))
    return values, np.isfinite(values), tuple(columns)


def fit_scaler(kind: str, features, columns=None) -> ScalerModel:
    """Fit per column on the valid cells of ``features``.

    ``features`` is a :class:`FeatureMatrix` or a 2-D array (NaN = invalid).
    """
    if kind not in KINDS:
        raise TrendlabError(f"unknown scaler kind {kind!r}; choose from {KINDS}")
    values, valid, names = _as_matrix(features, columns)
    state = []
    for j, name in enumerate(names):
        col = values[valid[:, j], j]
        if col.size == 0:
            raise TrendlabError(f"column {name!r} has no valid values to fit")
        if kind == "minmax":
            state.append((float(col.min()), float(col.max())))
        else:
            sample = np.sort(col)
            sample.setflags(write=False)
            state.append(sample)
    return ScalerModel(kind, names, tuple(state))


def _scale_column(model: ScalerModel, j: int, x: np.ndarray) -> np.ndarray:
    if model.kind == "minmax":
        lo, hi = model.state[j]
        if hi == lo:
            return np.full_like(x, 0.5)
        # far out-of-range inputs may overflow to +-inf; the clamp absorbs them
        with np.errstate(over="ignore"):
            return np.clip((x - lo) / (hi - lo), 0.0, 1.0)
    sample = model.state[j]
    # right-continuous ECDF: fraction of fitted values <= x
    return np.searchsorted(sample, x, side="right") / sample.size


def apply_scaler(model: ScalerModel, features, columns=None):
    """Rescale into ``[0, 1]``; invalid cells stay invalid.

    Returns a :class:`FeatureMatrix` for matrix input, else an array. For
    array input only NaN marks a missing cell, so ``-inf`` and ``+inf`` land
    on 0 and 1.
    """
    values, valid, names = _as_matrix(features, columns)
    if not isinstance(features, FeatureMatrix):
        valid = ~np.isnan(values)
    unknown = [n for n in names if n not in model.columns]
    if unknown:
        raise TrendlabError(f"scaler was not fitted on column(s): {', '.join(unknown)}")
    out = np.full(values.shape, np.nan)
    for j, name in enumerate(names):
        k = model.columns.index(name)
        rows = valid[:, j]
        out[rows, j] = _scale_column(model, k, values[rows, j])
    if isinstance(features, FeatureMatrix):
        return features.with_values(out)
    return out
