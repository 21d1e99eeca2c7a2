"""Global and local Fréchet regression weights and the per-slice solver.

For a single slice the weighted Fréchet objective in the 1-D Wasserstein
space reduces to an L2 problem over quantile functions, whose minimizer is
the weighted mean of the quantile rows projected onto the cone of
nondecreasing functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ArgumentError,
    BandwidthTooSmallError,
    DegenerateWeightsError,
    MonotonicityError,
    RankDeficiencyError,
)

SIGMA0_MIN = 1e-12
WEIGHT_SUM_TOL = 1e-8


def _as_design(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ArgumentError("predictors must be a vector or an n x q matrix")
    return X


@dataclass(frozen=True)
class GlobalWeightModel:
    """Sample moments behind ``s_iG(x) = 1 + (X_i - Xbar)' Sigma^-1 (x - Xbar)``."""

    X: np.ndarray
    mean: np.ndarray = field(init=False)
    covariance: np.ndarray = field(init=False)
    inverse_covariance: np.ndarray = field(init=False)
    condition_number: float = field(init=False)

    def __post_init__(self):
        X = _as_design(self.X)
        n, q = X.shape
        mean = X.mean(axis=0)
        C = X - mean
        cov = C.T @ C / n
        scale = max(float(np.max(np.abs(C))) ** 2, np.finfo(float).tiny)
        for j in range(q):
            sub = cov[: j + 1, : j + 1]
            ev = np.linalg.eigvalsh(sub)
            if ev.min() <= 1e-12 * scale:
                raise RankDeficiencyError(
                    f"predictor covariance is singular: column {j} is constant or collinear with earlier columns",
                    dimension=j,
                )
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "inverse_covariance", np.linalg.inv(cov))
        object.__setattr__(self, "condition_number", float(np.linalg.cond(cov)))

    def weights(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.size != self.X.shape[1]:
            raise ArgumentError(f"query has {x.size} coordinates, predictors have {self.X.shape[1]}")
        return 1.0 + (self.X - self.mean) @ (self.inverse_covariance @ (x - self.mean))


def global_weights(X, x) -> np.ndarray:
    return GlobalWeightModel(X).weights(x)


def _kernel(v, kernel):
    if kernel == "gaussian":
        return np.exp(-0.5 * v * v) / np.sqrt(2.0 * np.pi)
    if kernel == "epanechnikov":
        return np.where(np.abs(v) <= 1.0, 0.75 * (1.0 - v * v), 0.0)
    raise ArgumentError(f"unknown kernel {kernel!r}")


@dataclass(frozen=True)
class LocalWeightModel:
    """Local linear Fréchet weights for a scalar predictor."""

    X: np.ndarray
    h: float
    kernel: str = "gaussian"

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 2 and X.shape[1] == 1:
            X = X[:, 0]
        if X.ndim != 1:
            raise ArgumentError("local weights are defined for a scalar predictor only")
        if not float(self.h) > 0:
            raise ArgumentError(f"bandwidth h must be positive, got {self.h!r}")
        _kernel(np.zeros(1), self.kernel)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "h", float(self.h))

    def moments(self, x):
        d = self.X - float(x)
        k = _kernel(d / self.h, self.kernel) / self.h
        v0, v1, v2 = k.mean(), (k * d).mean(), (k * d * d).mean()
        return k, d, v0, v1, v2, v0 * v2 - v1 * v1

    def weights(self, x) -> np.ndarray:
        k, d, v0, v1, v2, sigma0 = self.moments(x)
        if not sigma0 > SIGMA0_MIN:
            raise BandwidthTooSmallError(
                f"local design is degenerate at x={float(x):.6g} (sigma0^2={sigma0:.3g}); increase h"
            )
        return k * (v2 - v1 * d) / sigma0


def local_weights(X, x, h, kernel="gaussian") -> np.ndarray:
    return LocalWeightModel(X, h, kernel).weights(x)


def pava(y, w=None) -> np.ndarray:
    """Weighted least-squares projection onto nondecreasing sequences."""
    y = np.asarray(y, dtype=float)
    n = y.size
    if n <= 1:
        return y.copy()
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    means = np.empty(n)
    weights = np.empty(n)
    sizes = np.empty(n, dtype=np.int64)
    top = -1
    for i in range(n):
        top += 1
        means[top], weights[top], sizes[top] = y[i], w[i], 1
        while top > 0 and means[top - 1] > means[top]:
            wt = weights[top - 1] + weights[top]
            means[top - 1] = (weights[top - 1] * means[top - 1] + weights[top] * means[top]) / wt
            weights[top - 1] = wt
            sizes[top - 1] += sizes[top]
            top -= 1
    return np.repeat(means[: top + 1], sizes[: top + 1])


def monotone_project(rows) -> np.ndarray:
    """Row-wise PAVA with uniform weights; rows that are already monotone pass through."""
    rows = np.array(rows, dtype=float)
    flat = rows.reshape(-1, rows.shape[-1])
    bad = np.any(np.diff(flat, axis=1) < 0, axis=1)
    for r in np.flatnonzero(bad):
        flat[r] = pava(flat[r])
    return flat.reshape(rows.shape)


def weighted_quantile_mean(Q, weights) -> np.ndarray:
    """``(1/n) sum_i s_i Q_i`` along the first axis of Q (n, ...)."""
    Q = np.asarray(Q, dtype=float)
    s = np.asarray(weights, dtype=float)
    return np.tensordot(s, Q, axes=(0, 0)) / s.size


def _check_weights(s, n):
    if s.shape != (n,):
        raise ArgumentError(f"expected {n} weights, got shape {s.shape}")
    if np.all(s == 0):
        raise DegenerateWeightsError("all weights are zero")
    if abs(s.sum() - n) > WEIGHT_SUM_TOL * max(n, 1):
        raise ArgumentError(f"weights must sum to n={n}, got {s.sum()!r}")


def frechet_slice_fit(Q, weights, bounds=(-np.inf, np.inf)) -> np.ndarray:
    """Weighted Fréchet mean of one slice's quantile rows (n x S)."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2:
        raise ArgumentError("Q must be an n x S array")
    s = np.asarray(weights, dtype=float)
    _check_weights(s, Q.shape[0])
    if np.any(np.diff(Q, axis=1) < 0):
        raise MonotonicityError("input quantile rows must be nondecreasing")
    raw = weighted_quantile_mean(Q, s)
    return np.clip(pava(raw), bounds[0], bounds[1])


def frechet_slices_fit(Q, weights, bounds=(-np.inf, np.inf)) -> np.ndarray:
    """All slices at once: Q has shape (n, L, S); returns (L, S)."""
    Q = np.asarray(Q, dtype=float)
    s = np.asarray(weights, dtype=float)
    _check_weights(s, Q.shape[0])
    return np.clip(monotone_project(weighted_quantile_mean(Q, s)), bounds[0], bounds[1])
