"""Domain types shared by every module: box domains, angle grids, point
clouds, gridded densities and regression datasets.

All containers are frozen dataclasses whose arrays are marked read-only, so
instances can be handed to worker processes or threads without copying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    ArgumentError,
    EmptyMassError,
    GridError,
    SchemaError,
    UnsupportedDimensionError,
)

UNIT_NORM_TOL = 1e-12
MASS_TOL = 1e-8


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box ``[lower, upper]`` in R^p."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _frozen(np.atleast_1d(self.lower))
        upper = _frozen(np.atleast_1d(self.upper))
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size == 0:
            raise SchemaError("domain bounds must be equal-length vectors")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise SchemaError("domain bounds must be finite")
        if np.any(lower >= upper):
            raise SchemaError(f"domain requires lower < upper, got {lower} and {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def square(cls, half_width=1.0, dim=2):
        return cls(np.full(dim, -half_width), np.full(dim, half_width))

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def radius(self) -> float:
        """Largest Euclidean norm attained on the box (max over corners)."""
        far = np.maximum(np.abs(self.lower), np.abs(self.upper))
        return float(np.linalg.norm(far))

    def cell_widths(self, shape) -> np.ndarray:
        return self.widths / np.asarray(shape, dtype=float)

    def cell_volume(self, shape) -> float:
        return float(np.prod(self.cell_widths(shape)))

    def axes(self, shape) -> list[np.ndarray]:
        """Cell-center coordinates along each axis."""
        shape = tuple(int(s) for s in shape)
        if len(shape) != self.dim:
            raise GridError(f"grid shape {shape} does not match dimension {self.dim}")
        h = self.cell_widths(shape)
        return [self.lower[k] + (np.arange(shape[k]) + 0.5) * h[k] for k in range(self.dim)]

    def mesh(self, shape) -> np.ndarray:
        """Cell centers as an array of shape ``(*shape, p)`` (``ij`` indexing)."""
        return np.stack(np.meshgrid(*self.axes(shape), indexing="ij"), axis=-1)

    def contains(self, points, pad=0.0) -> np.ndarray:
        pts = np.atleast_2d(points)
        slack = pad * self.widths
        return np.all((pts >= self.lower - slack) & (pts <= self.upper + slack), axis=1)

    def expanded(self, fraction) -> "Domain":
        slack = fraction * self.widths
        return Domain(self.lower - slack, self.upper + slack)

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True)
class AngleGrid:
    """Directions ``theta_l`` (rows of ``angles``), each carrying weight 1/L."""

    angles: np.ndarray

    def __post_init__(self):
        a = _frozen(np.atleast_2d(self.angles))
        if a.ndim != 2 or a.shape[0] < 2:
            raise GridError("an angle grid needs at least two directions")
        norms = np.linalg.norm(a, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            raise GridError("angle grid vectors must have unit norm")
        object.__setattr__(self, "angles", a)

    @classmethod
    def from_radians(cls, alphas) -> "AngleGrid":
        alphas = np.asarray(alphas, dtype=float)
        return cls(np.column_stack([np.cos(alphas), np.sin(alphas)]))

    @property
    def L(self) -> int:
        return int(self.angles.shape[0])

    @property
    def dim(self) -> int:
        return int(self.angles.shape[1])

    @property
    def measure_weight(self) -> float:
        return 1.0 / self.L

    @property
    def radians(self) -> np.ndarray:
        if self.dim != 2:
            raise UnsupportedDimensionError("polar angles exist only for p = 2")
        return np.arctan2(self.angles[:, 1], self.angles[:, 0])

    def same_as(self, other: "AngleGrid", atol=1e-12) -> bool:
        return self.angles.shape == other.angles.shape and bool(
            np.allclose(self.angles, other.angles, rtol=0.0, atol=atol)
        )

    def key(self) -> bytes:
        return self.angles.tobytes()


def make_angle_grid(p: int, L: int) -> AngleGrid:
    """Equally spaced directions on the half circle: alpha_l = pi (l - 1) / L."""
    if p != 2:
        raise UnsupportedDimensionError(f"angle grids are implemented for p = 2 only, got p = {p}")
    if L < 2:
        raise ArgumentError(f"need L >= 2 angles, got {L}")
    alphas = math.pi * np.arange(L) / L
    angles = np.column_stack([np.cos(alphas), np.sin(alphas)])
    # cos/sin are correctly rounded to well under 1e-12 of unit norm; renormalize anyway
    angles /= np.linalg.norm(angles, axis=1, keepdims=True)
    return AngleGrid(angles)


@dataclass(frozen=True)
class PointCloud:
    """Empirical distribution: N unweighted support points in R^p (rows)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise SchemaError("a point cloud needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise SchemaError("point cloud coordinates must be finite")
        object.__setattr__(self, "points", _frozen(pts))

    @property
    def N(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def __len__(self):
        return self.N


@dataclass(frozen=True)
class DensityGrid:
    """Density values at the cell centers of a regular grid over a box domain.

    ``values`` must be non-negative with Riemann sum (cell volume times sum of
    values) equal to one within 1e-8. Pass ``normalize=True`` to rescale
    instead of rejecting.
    """

    domain: Domain
    values: np.ndarray
    normalize: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != self.domain.dim:
            raise GridError(
                f"grid values have {v.ndim} axes but the domain has dimension {self.domain.dim}"
            )
        if not np.all(np.isfinite(v)):
            raise GridError("density values must be finite")
        if np.any(v < 0):
            raise GridError("density values must be non-negative")
        mass = float(v.sum()) * self.domain.cell_volume(v.shape)
        if self.normalize:
            if mass <= 0:
                raise EmptyMassError("cannot normalize a grid with zero mass")
            v = v / mass
        elif abs(mass - 1.0) > MASS_TOL:
            raise GridError(f"density grid integrates to {mass!r}, expected 1 within {MASS_TOL}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.values.shape)

    @property
    def cell_volume(self) -> float:
        return self.domain.cell_volume(self.shape)

    def mass(self) -> float:
        return float(self.values.sum()) * self.cell_volume


Response = Union[PointCloud, DensityGrid]


@dataclass(frozen=True)
class RegressionDataset:
    """n pairs (predictor in R^q, distributional response) over a common domain."""

    predictors: np.ndarray
    responses: tuple
    domain: Domain
    sample_ids: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.predictors, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise SchemaError("predictors must be an n x q matrix")
        if not np.all(np.isfinite(X)):
            raise SchemaError("predictors must be finite")
        responses = tuple(self.responses)
        n = X.shape[0]
        if n < 2:
            raise SchemaError(f"need at least two samples, got {n}")
        if len(responses) != n:
            raise SchemaError(f"{n} predictor rows but {len(responses)} responses")
        kinds = {type(r) for r in responses}
        if len(kinds) != 1 or not kinds <= {PointCloud, DensityGrid}:
            raise SchemaError("responses must be all PointClouds or all DensityGrids")
        for i, r in enumerate(responses):
            p = r.dim if isinstance(r, PointCloud) else r.domain.dim
            if p != self.domain.dim:
                raise SchemaError(
                    f"response {i} has dimension {p}, domain has dimension {self.domain.dim}"
                )
        ids = tuple(self.sample_ids) if self.sample_ids else tuple(range(n))
        if len(ids) != n:
            raise SchemaError("sample_ids length mismatch")
        object.__setattr__(self, "predictors", _frozen(X))
        object.__setattr__(self, "responses", responses)
        object.__setattr__(self, "sample_ids", ids)

    @property
    def n(self) -> int:
        return int(self.predictors.shape[0])

    @property
    def q(self) -> int:
        return int(self.predictors.shape[1])

    @property
    def p(self) -> int:
        return self.domain.dim

    @property
    def is_cloud(self) -> bool:
        return isinstance(self.responses[0], PointCloud)

    def subset(self, index: Sequence[int]) -> "RegressionDataset":
        index = list(index)
        return RegressionDataset(
            self.predictors[index],
            tuple(self.responses[i] for i in index),
            self.domain,
            tuple(self.sample_ids[i] for i in index),
        )
