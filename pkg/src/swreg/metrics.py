"""Distances between distributions and their slicings, EMISWE and the
sliced Wasserstein fraction of variance explained."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import DensityGrid
from .errors import ArgumentError, DegenerateVarianceError, GridError
from .slicing import SlicedDensities, SlicedQuantiles, _check_monotone


@dataclass(frozen=True)
class DistanceReport:
    value: float
    per_angle: Optional[np.ndarray] = None


def wasserstein_1d(qa, qb) -> float:
    """L2-Wasserstein distance between two quantile rows on the same midpoint grid."""
    qa = np.asarray(qa, dtype=float)
    qb = np.asarray(qb, dtype=float)
    if qa.ndim != 1 or qa.shape != qb.shape:
        raise GridError(f"quantile rows must share one grid, got {qa.shape} and {qb.shape}")
    _check_monotone(qa)
    _check_monotone(qb)
    return float(np.sqrt(np.mean((qa - qb) ** 2)))


def sliced_wasserstein_sq(a_values, b_values) -> np.ndarray:
    """Squared slice-averaged distance for stacked quantile arrays (..., L, S)."""
    d = np.asarray(a_values) - np.asarray(b_values)
    return np.mean(d * d, axis=(-2, -1))


def sliced_wasserstein(a: SlicedQuantiles, b: SlicedQuantiles) -> DistanceReport:
    """Root of the angle-averaged squared 1-D Wasserstein distances (uniform 1/L weights)."""
    if not a.angle_grid.same_as(b.angle_grid):
        raise GridError("sliced quantiles use different angle grids")
    if a.S != b.S:
        raise GridError(f"sliced quantiles use different probability grids ({a.S} vs {b.S})")
    per_angle = np.mean((a.values - b.values) ** 2, axis=1)
    return DistanceReport(float(np.sqrt(per_angle.mean())), per_angle)


QuantileMap = Union[Callable[[float], SlicedQuantiles], Sequence[SlicedQuantiles]]


def _lookup(m: QuantileMap, k: int, x: float) -> SlicedQuantiles:
    return m(x) if callable(m) else m[k]


def emiswe(fitted: QuantileMap, truth: QuantileMap, x_grid) -> float:
    """Mean over ``x_grid`` of squared sliced distances between fitted and true maps.

    Either map may be a callable ``x -> SlicedQuantiles`` or a sequence aligned
    with ``x_grid``. This is one Monte Carlo run's contribution.
    """
    xs = np.atleast_1d(np.asarray(x_grid, dtype=float))
    if xs.size == 0:
        raise ArgumentError("emiswe needs a non-empty evaluation grid")
    vals = [sliced_wasserstein(_lookup(fitted, k, x), _lookup(truth, k, x)).value ** 2 for k, x in enumerate(xs)]
    return float(np.mean(vals))


def frechet_mean(responses: Sequence[SlicedQuantiles]) -> SlicedQuantiles:
    """Sample barycenter in the quantile slicing space: the pointwise quantile mean."""
    if len(responses) == 0:
        raise ArgumentError("need at least one response")
    grid = responses[0].angle_grid
    return SlicedQuantiles(grid, np.mean([r.values for r in responses], axis=0))


def sw_r2(responses: Sequence[SlicedQuantiles], fitted: Sequence[SlicedQuantiles]) -> float:
    """``1 - sum d^2(mu_i, fit_i) / sum d^2(mu_i, mean)``."""
    if len(responses) != len(fitted):
        raise ArgumentError("responses and fitted values differ in length")
    if len(responses) < 2:
        raise ArgumentError("need at least two responses")
    mean = frechet_mean(responses)
    resid = sum(sliced_wasserstein(r, f).value ** 2 for r, f in zip(responses, fitted))
    total = sum(sliced_wasserstein(r, mean).value ** 2 for r in responses)
    if total <= 0:
        raise DegenerateVarianceError("all responses coincide; R^2 is undefined")
    return float(1.0 - resid / total)


def l2_distance(a: DensityGrid, b: DensityGrid) -> float:
    if a.shape != b.shape or not (
        np.array_equal(a.domain.lower, b.domain.lower) and np.array_equal(a.domain.upper, b.domain.upper)
    ):
        raise GridError("density grids must share domain and shape")
    return float(np.sqrt(np.sum((a.values - b.values) ** 2) * a.cell_volume))


def sliced_l2_per_angle(a: SlicedDensities, b: SlicedDensities) -> np.ndarray:
    """L2 distance between corresponding slice densities, one value per angle."""
    if not a.angle_grid.same_as(b.angle_grid) or a.U != b.U or not np.allclose(a.u_grid, b.u_grid):
        raise GridError("slice densities must share angle and u grids")
    return np.sqrt(np.sum((a.values - b.values) ** 2, axis=1) * a.du)
