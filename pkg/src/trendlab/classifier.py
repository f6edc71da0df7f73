"""Soft-margin kernel SVM solved by sequential minimal optimisation.

The dual ``min 1/2 a'Qa - e'a`` s.t. ``0 <= a_i <= C``, ``y'a = 0`` with
``Q_ij = y_i y_j K(x_i, x_j)`` is solved two multipliers at a time. Each step
takes the maximal violating pair (first index on ties), so the solver is
deterministic. It stops when the pair's violation ``m(a) - M(a)`` drops
below ``tolerance``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ModelError

FORMAT_VERSION = 1
KERNELS = ("linear", "rbf")
_TAU = 1e-12


@dataclass(frozen=True)
class SvmParams:
    kernel: str = "rbf"
    C: float = 1.0
    gamma: float | None = None  # None: 1 / n_features
    tolerance: float = 1e-3
    max_iter: int = 1_000_000

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ModelError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if not self.C > 0:
            raise ModelError(f"C must be positive, got {self.C}")
        if self.gamma is not None and not self.gamma > 0:
            raise ModelError(f"gamma must be positive, got {self.gamma}")
        if not self.tolerance > 0:
            raise ModelError("tolerance must be positive")


def kernel_matrix(kernel: str, gamma: float, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T
    sq = (A**2).sum(axis=1)[:, None] + (B**2).sum(axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True, eq=False)
class SvmModel:
    kernel: str
    C: float
    gamma: float
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i per support vector
    bias: float
    support_indices: np.ndarray | None = None
    kkt_gap: float = 0.0
    n_iter: int = 0

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_features:
            raise ModelError(f"input has {X.shape[1]} features, model expects {self.n_features}")
        K = kernel_matrix(self.kernel, self.gamma, X, self.support_vectors)
        f = K @ self.dual_coef + self.bias
        return f[0] if single else f

    def predict(self, X) -> np.ndarray:
        """Labels in {+1, -1}; a zero decision value maps to +1."""
        f = self.decision_function(X)
        return np.where(f >= 0, 1, -1)

    def to_json(self) -> str:
        return json.dumps({
            "format_version": FORMAT_VERSION,
            "kernel": self.kernel,
            "C": self.C,
            "gamma": self.gamma,
            "support_vectors": self.support_vectors.tolist(),
            "dual_coefficients": self.dual_coef.tolist(),
            "bias": self.bias,
        })

    @classmethod
    def from_json(cls, text: str) -> "SvmModel":
        doc = json.loads(text)
        if doc.get("format_version") != FORMAT_VERSION:
            raise ModelError(f"unsupported SVM format_version {doc.get('format_version')!r}")
        sv = np.array(doc["support_vectors"], dtype=float)
        return cls(doc["kernel"], doc["C"], doc["gamma"], sv.reshape(len(sv), -1),
                   np.array(doc["dual_coefficients"], dtype=float), doc["bias"])


def _check_xy(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y).reshape(-1)
    if len(X) != len(y):
        raise ModelError(f"{len(X)} rows vs {len(y)} labels")
    if not np.all(np.isfinite(X)):
        raise ModelError("features must be finite")
    if not np.isin(y, (-1, 1)).all():
        raise ModelError("labels must be +1 or -1")
    if len(np.unique(y)) < 2:
        raise ModelError("training labels contain a single class")
    return X, y.astype(float)


def train_svm(X, y, params: SvmParams = SvmParams()) -> SvmModel:
    X, y = _check_xy(X, y)
    n = len(y)
    gamma = params.gamma if params.gamma is not None else 1.0 / X.shape[1]
    C = params.C
    Q = kernel_matrix(params.kernel, gamma, X, X) * np.outer(y, y)
    QD = np.diag(Q).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient Q alpha - e

    it = 0
    gap = np.inf
    while it < params.max_iter:
        up = ((alpha < C) & (y > 0)) | ((alpha > 0) & (y < 0))
        low = ((alpha < C) & (y < 0)) | ((alpha > 0) & (y > 0))
        score = -y * G
        i = int(np.argmax(np.where(up, score, -np.inf)))
        j = int(np.argmin(np.where(low, score, np.inf)))
        gap = score[i] - score[j]
        if gap < params.tolerance:
            break
        it += 1
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(QD[i] + QD[j] + 2 * Q[i, j], _TAU)
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            new_i, new_j = ai + delta, aj + delta
            if diff > 0:
                if new_j < 0:
                    new_j, new_i = 0.0, diff
            elif new_i < 0:
                new_i, new_j = 0.0, -diff
            if diff > 0:
                if new_i > C:
                    new_i, new_j = C, C - diff
            elif new_j > C:
                new_j, new_i = C, C + diff
        else:
            quad = max(QD[i] + QD[j] - 2 * Q[i, j], _TAU)
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            new_i, new_j = ai - delta, aj + delta
            if total > C:
                if new_i > C:
                    new_i, new_j = C, total - C
            elif new_j < 0:
                new_j, new_i = 0.0, total
            if total > C:
                if new_j > C:
                    new_j, new_i = C, total - C
            elif new_i < 0:
                new_i, new_j = 0.0, total
        alpha[i], alpha[j] = new_i, new_j
        G += Q[:, i] * (new_i - ai) + Q[:, j] * (new_j - aj)
    else:
        raise ModelError(f"SMO did not converge in {params.max_iter} iterations (gap {gap:.3g})")

    rho = _offset(alpha, y, G, C)
    sv = np.flatnonzero(alpha > 0)
    return SvmModel(
        kernel=params.kernel,
        C=C,
        gamma=gamma,
        support_vectors=X[sv].copy(),
        dual_coef=(alpha * y)[sv],
        bias=-rho,
        support_indices=sv,
        kkt_gap=float(gap),
        n_iter=it,
    )


def _offset(alpha, y, G, C) -> float:
    """Decision offset: mean of ``y*G`` over free multipliers, else the feasible midpoint."""
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(yG[free].mean())
    at_upper = alpha >= C
    ub_mask = (at_upper & (y < 0)) | (~at_upper & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (~at_upper & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2)


def predict(model: SvmModel, X) -> np.ndarray:
    return model.predict(X)


def decision_function(model: SvmModel, X) -> np.ndarray:
    return model.decision_function(X)
