"""Forward slicing: projections of point clouds, the Radon transform of
gridded densities, and conversions between slice densities and slice
quantile functions.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import sparse
from scipy.ndimage import gaussian_filter1d

from .core import AngleGrid, DensityGrid, Domain, PointCloud, _frozen
from .errors import (
    ArgumentError,
    EmptyMassError,
    GridError,
    MonotonicityError,
    ResolutionError,
    UnsupportedDimensionError,
)

ROW_MASS_TOL = 1e-6
MONOTONE_TOL = 1e-12


def prob_grid(S: int) -> np.ndarray:
    """Midpoint probability grid ``(k - 1/2) / S``, k = 1..S."""
    return (np.arange(S) + 0.5) / S


def _check_monotone(values, what="quantile rows"):
    v = np.asarray(values)
    if v.shape[-1] < 2:
        return
    d = np.diff(v, axis=-1)
    scale = np.maximum(1.0, np.abs(v).max(axis=-1, keepdims=True))
    if np.any(d < -MONOTONE_TOL * scale):
        raise MonotonicityError(f"{what} must be nondecreasing")


@dataclass(frozen=True)
class SlicedQuantiles:
    """Quantile function of each slice on the midpoint probability grid (L x S)."""

    angle_grid: AngleGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != self.angle_grid.L:
            raise GridError(f"expected {self.angle_grid.L} quantile rows, got array of shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise GridError("quantile values must be finite")
        _check_monotone(v)
        object.__setattr__(self, "values", _frozen(v))

    @property
    def S(self) -> int:
        return int(self.values.shape[1])

    @property
    def prob_grid(self) -> np.ndarray:
        return prob_grid(self.S)


@dataclass(frozen=True)
class SlicedDensities:
    """Density of each slice on an equally spaced u-grid (L x U); rows have unit Riemann mass."""

    angle_grid: AngleGrid
    u_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if u.ndim != 1 or u.size < 2:
            raise GridError("u-grid needs at least two points")
        du = np.diff(u)
        if np.any(du <= 0) or np.ptp(du) > 1e-9 * abs(du[0]) * u.size:
            raise GridError("u-grid must be equally spaced and increasing")
        if v.shape != (self.angle_grid.L, u.size):
            raise GridError(f"expected values of shape {(self.angle_grid.L, u.size)}, got {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise GridError("slice densities must be finite and non-negative")
        mass = v.sum(axis=1) * (u[1] - u[0])
        if np.any(np.abs(mass - 1.0) > ROW_MASS_TOL):
            raise GridError("each slice density must integrate to one")
        object.__setattr__(self, "u_grid", _frozen(u))
        object.__setattr__(self, "values", _frozen(v))

    @property
    def U(self) -> int:
        return int(self.u_grid.size)

    @property
    def du(self) -> float:
        return float(self.u_grid[1] - self.u_grid[0])


def slice_pointcloud(cloud: PointCloud, theta) -> np.ndarray:
    """Sorted projections ``<W_j, theta>``."""
    return np.sort(cloud.points @ np.asarray(theta, dtype=float))


def _empirical_quantile_index(N: int, S: int) -> np.ndarray:
    # left-continuous inverse of the empirical CDF at (k - 1/2)/S: order statistic ceil(N s_k),
    # computed in integers to stay exact
    k = np.arange(1, S + 1)
    return (N * (2 * k - 1) + 2 * S - 1) // (2 * S) - 1


def quantiles_from_cloud(cloud: PointCloud, angles: AngleGrid, S: int) -> SlicedQuantiles:
    if cloud.dim != angles.dim:
        raise GridError("cloud and angle grid dimensions disagree")
    proj = np.sort(cloud.points @ angles.angles.T, axis=0)  # N x L
    idx = _empirical_quantile_index(cloud.N, S)
    return SlicedQuantiles(angles, proj[idx].T)


def sorted_projections(points, angles: AngleGrid) -> np.ndarray:
    """L x N matrix of sorted projections of an N x p array."""
    return np.sort(np.asarray(points) @ angles.angles.T, axis=0).T


def default_u_grid(domain: Domain, U: int) -> np.ndarray:
    """Symmetric u-grid ``[-R, R]`` with R the domain radius, covering every chord."""
    R = domain.radius
    return np.linspace(-R, R, U)


def default_u_count(domain: Domain, shape) -> int:
    """Number of u-points giving a spacing of about half the smallest cell width."""
    h = 0.5 * float(np.min(domain.cell_widths(shape)))
    return int(math.ceil(2.0 * domain.radius / h)) + 1


class RadonOperator:
    """Discrete Radon transform for one grid geometry.

    Each (angle, u) line is sampled at a symmetric set of offsets with step equal
    to half the cell diagonal; the density is bilinearly interpolated between
    cell centers (constant extension up to the domain boundary, zero outside).
    Per-angle sparse matrices are cached when the operator is small enough.
    """

    MAX_CACHED_NNZ = 12_000_000

    def __init__(self, domain: Domain, shape, angles: AngleGrid, U: int):
        if domain.dim != 2 or angles.dim != 2:
            raise UnsupportedDimensionError("grid Radon transform is implemented for p = 2 only")
        if U < 8:
            raise ResolutionError(f"u-grid needs at least 8 points, got {U}")
        self.domain = domain
        self.shape = tuple(int(s) for s in shape)
        self.angles = angles
        self.U = int(U)
        self.u_grid = default_u_grid(domain, self.U)
        cell = domain.cell_widths(self.shape)
        self.step = 0.5 * float(np.linalg.norm(cell))
        half = int(math.ceil(domain.radius / self.step))
        self.t_grid = (np.arange(2 * half + 1) - half) * self.step
        self._mats = None
        est = 4 * self.U * self.t_grid.size * angles.L
        if est <= self.MAX_CACHED_NNZ:
            self._mats = [self._angle_matrix(l) for l in range(angles.L)]

    def _angle_matrix(self, l):
        th = self.angles.angles[l]
        e = np.array([-th[1], th[0]])
        u = self.u_grid[:, None]
        t = self.t_grid[None, :]
        zx = (u * th[0] + t * e[0]).ravel()
        zy = (u * th[1] + t * e[1]).ravel()
        rows = np.repeat(np.arange(self.U), self.t_grid.size)
        lo, hi = self.domain.lower, self.domain.upper
        inside = (zx >= lo[0]) & (zx <= hi[0]) & (zy >= lo[1]) & (zy <= hi[1])
        zx, zy, rows = zx[inside], zy[inside], rows[inside]
        n0, n1 = self.shape
        cell = self.domain.cell_widths(self.shape)
        fx = np.clip((zx - lo[0]) / cell[0] - 0.5, 0.0, n0 - 1)
        fy = np.clip((zy - lo[1]) / cell[1] - 0.5, 0.0, n1 - 1)
        i0 = np.minimum(np.floor(fx).astype(np.int64), max(n0 - 2, 0))
        j0 = np.minimum(np.floor(fy).astype(np.int64), max(n1 - 2, 0))
        wx = fx - i0
        wy = fy - j0
        i1 = np.minimum(i0 + 1, n0 - 1)
        j1 = np.minimum(j0 + 1, n1 - 1)
        cols = np.concatenate([i0 * n1 + j0, i1 * n1 + j0, i0 * n1 + j1, i1 * n1 + j1])
        w = np.concatenate([(1 - wx) * (1 - wy), wx * (1 - wy), (1 - wx) * wy, wx * wy]) * self.step
        mat = sparse.coo_matrix((w, (np.tile(rows, 4), cols)), shape=(self.U, n0 * n1))
        return mat.tocsr()

    def apply(self, values) -> np.ndarray:
        """Raw line integrals. ``values`` has shape ``shape`` or ``(B, *shape)``;
        returns ``(L, U)`` or ``(B, L, U)``."""
        v = np.asarray(values, dtype=float)
        single = v.ndim == 2
        flat = v.reshape(1 if single else v.shape[0], -1).T  # G x B
        out = np.empty((flat.shape[1], self.angles.L, self.U))
        for l in range(self.angles.L):
            mat = self._mats[l] if self._mats is not None else self._angle_matrix(l)
            out[:, l, :] = (mat @ flat).T
        return out[0] if single else out


_OPERATORS: "OrderedDict[tuple, RadonOperator]" = OrderedDict()
_MAX_OPERATORS = 6


def radon_operator(domain: Domain, shape, angles: AngleGrid, U: int) -> RadonOperator:
    key = (domain.lower.tobytes(), domain.upper.tobytes(), tuple(shape), angles.key(), int(U))
    op = _OPERATORS.get(key)
    if op is None:
        op = RadonOperator(domain, shape, angles, U)
        if op._mats is not None:
            _OPERATORS[key] = op
            while len(_OPERATORS) > _MAX_OPERATORS:
                _OPERATORS.popitem(last=False)
    else:
        _OPERATORS.move_to_end(key)
    return op


def _normalize_rows(raw, du):
    mass = raw.sum(axis=-1, keepdims=True) * du
    if np.any(mass <= 0):
        raise EmptyMassError("a slice carries no mass")
    return raw / mass


def radon_grid(f: DensityGrid, angles: AngleGrid, U: int = None) -> SlicedDensities:
    """Radon transform of a gridded density, each row renormalized to unit mass."""
    if f.domain.dim != 2:
        raise UnsupportedDimensionError("grid Radon transform is implemented for p = 2 only")
    if U is None:
        U = default_u_count(f.domain, f.shape)
    op = radon_operator(f.domain, f.shape, angles, U)
    raw = np.clip(op.apply(f.values), 0.0, None)
    return SlicedDensities(angles, op.u_grid, _normalize_rows(raw, op.u_grid[1] - op.u_grid[0]))


def radon_batch(values, domain: Domain, angles: AngleGrid, U: int) -> np.ndarray:
    """Row-normalized Radon transforms of a stack of grids, shape ``(B, L, U)``."""
    v = np.asarray(values, dtype=float)
    op = radon_operator(domain, v.shape[1:], angles, U)
    raw = np.clip(op.apply(v), 0.0, None)
    return _normalize_rows(raw, op.u_grid[1] - op.u_grid[0])


def quantile_rows_from_density(rows, u_grid, S: int) -> np.ndarray:
    """Quantiles on the midpoint grid from density rows of shape ``(..., U)``."""
    rows = np.asarray(rows, dtype=float)
    u = np.asarray(u_grid, dtype=float)
    du = u[1] - u[0]
    lead = rows.shape[:-1]
    flat = rows.reshape(-1, rows.shape[-1])
    cdf = np.zeros_like(flat)
    cdf[:, 1:] = np.cumsum(0.5 * (flat[:, 1:] + flat[:, :-1]) * du, axis=1)
    total = cdf[:, -1:]
    if np.any(total <= 0):
        raise EmptyMassError("a slice density has zero mass")
    cdf = cdf / total
    s = prob_grid(S)
    R, U = cdf.shape
    # one searchsorted over all rows: shift row r by 4r (exact for values in [0, 1]),
    # then repair the few indices disturbed by the rounding of the shifted values
    shift = 4.0 * np.arange(R)[:, None]
    m = np.searchsorted((cdf + shift).ravel(), (s[None, :] + shift).ravel(), side="left").reshape(R, S)
    m -= np.arange(R)[:, None] * U
    rows_ix = np.arange(R)[:, None]
    for _ in range(U):
        m = np.clip(m, 0, U)
        hi = np.take_along_axis(cdf, np.minimum(m, U - 1), axis=1)
        lo = np.take_along_axis(cdf, np.maximum(m - 1, 0), axis=1)
        up = (m < U) & (hi < s)
        down = (m > 0) & (lo >= s)
        if not (up.any() or down.any()):
            break
        m = m + up - down
    m = np.clip(m, 1, U - 1)
    c0 = cdf[rows_ix, m - 1]
    c1 = cdf[rows_ix, m]
    frac = (s - c0) / np.where(c1 > c0, c1 - c0, 1.0)
    out = u[m - 1] + np.clip(frac, 0.0, 1.0) * du
    # rounding can produce last-ulp inversions across pooled flat CDF stretches
    out = np.maximum.accumulate(out, axis=1)
    return out.reshape(*lead, S)


def quantiles_from_density(lam: SlicedDensities, S: int) -> SlicedQuantiles:
    """Cumulative-trapezoid CDF per row, inverted by monotone linear interpolation."""
    return SlicedQuantiles(lam.angle_grid, quantile_rows_from_density(lam.values, lam.u_grid, S))


def silverman_bandwidth(atoms) -> float:
    """``0.9 * min(sd, IQR / 1.34) * n**-0.2`` (sd alone when the IQR vanishes)."""
    return float(silverman_bandwidths(np.asarray(atoms, dtype=float)[None, :])[0])


def silverman_bandwidths(rows) -> np.ndarray:
    """Row-wise Silverman bandwidths of an (R, n) array."""
    x = np.asarray(rows, dtype=float)
    n = x.shape[1]
    sd = x.std(axis=1, ddof=1) if n > 1 else np.zeros(x.shape[0])
    q75, q25 = np.percentile(x, [75, 25], axis=1)
    iqr = (q75 - q25) / 1.34
    sigma = np.where(iqr > 0, np.minimum(sd, iqr), sd)
    return 0.9 * sigma * n ** (-0.2)


def _linear_bin_rows(rows, u0, du, U):
    """Linear binning of equal-mass atoms onto grid nodes, per row; atoms outside are dropped."""
    R = rows.shape[0]
    pos = (rows - u0) / du
    keep = (pos >= 0) & (pos <= U - 1)
    r = np.broadcast_to(np.arange(R)[:, None], rows.shape)[keep]
    pos = pos[keep]
    i0 = np.minimum(np.floor(pos).astype(np.int64), U - 2)
    w = pos - i0
    base = r * U + i0
    counts = np.bincount(base, weights=1.0 - w, minlength=R * U) + np.bincount(base + 1, weights=w, minlength=R * U)
    return counts[: R * U].reshape(R, U)


def _nearest_bin_rows(rows, u0, du, U):
    R = rows.shape[0]
    m = np.rint((rows - u0) / du).astype(np.int64)
    keep = (m >= 0) & (m < U)
    r = np.broadcast_to(np.arange(R)[:, None], rows.shape)[keep]
    return np.bincount(r * U + m[keep], minlength=R * U).astype(float).reshape(R, U)


Smoothing = Union[str, float, None]


def density_rows_from_quantiles(q_rows, u_grid, smoothing: Smoothing = "silverman") -> np.ndarray:
    """Slice densities from quantile rows treated as S equal-mass atoms.

    ``smoothing`` is ``"none"`` (histogram on the cells centered at the grid
    nodes), ``"silverman"`` (per-row Silverman bandwidth) or a positive float.
    Kernel smoothing is a Gaussian KDE evaluated by linear binning on the
    u-grid followed by discrete Gaussian convolution, then truncated to the
    grid range and renormalized.
    """
    q_rows = np.atleast_2d(np.asarray(q_rows, dtype=float))
    u = np.asarray(u_grid, dtype=float)
    U = u.size
    du = u[1] - u[0]
    R = q_rows.shape[0]
    if smoothing is None or smoothing == "none":
        h = np.zeros(R)
    elif smoothing == "silverman":
        h = silverman_bandwidths(q_rows)
    else:
        h = np.full(R, float(smoothing))
    out = np.empty((R, U))
    smooth = h > 0
    if np.any(~smooth):
        out[~smooth] = _nearest_bin_rows(q_rows[~smooth], u[0], du, U)
    if np.any(smooth):
        binned = _linear_bin_rows(q_rows[smooth], u[0], du, U)
        for j, (row, hj) in enumerate(zip(binned, h[smooth])):
            binned[j] = gaussian_filter1d(row, hj / du, mode="constant", truncate=5.0)
        out[smooth] = binned
    out = np.clip(out, 0.0, None)
    mass = out.sum(axis=1, keepdims=True) * du
    if np.any(mass <= 0):
        raise EmptyMassError("all quantile atoms fall outside the u-grid")
    return out / mass


def density_from_quantiles(
    gamma: SlicedQuantiles, U: int, smoothing: Smoothing = "silverman", u_range=None
) -> SlicedDensities:
    if U < 8:
        raise ResolutionError(f"u-grid needs at least 8 points, got {U}")
    if smoothing not in (None, "none", "silverman"):
        try:
            if not float(smoothing) > 0:
                raise ValueError
        except (TypeError, ValueError):
            raise ArgumentError(f"smoothing must be 'none', 'silverman' or a positive bandwidth, got {smoothing!r}")
    _check_monotone(gamma.values)
    if u_range is None:
        lo, hi = float(gamma.values.min()), float(gamma.values.max())
        pad = 0.1 * (hi - lo) if hi > lo else 1.0
        u_range = (lo - pad, hi + pad)
    u = np.linspace(float(u_range[0]), float(u_range[1]), U)
    return SlicedDensities(gamma.angle_grid, u, density_rows_from_quantiles(gamma.values, u, smoothing))
