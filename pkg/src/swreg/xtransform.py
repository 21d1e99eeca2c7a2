"""Abstract slicing transform with the Radon transform as the registered implementation.

A slicing transform maps a density on a domain to a family of 1-D densities
indexed by direction, and comes with a regularized inverse. ``verify_contract``
measures, without gating, the properties a valid transform should have: a
Lipschitz-type bound of the forward map in L2 and round-trip errors that shrink
as the regularization cutoff grows. Injectivity cannot be checked numerically.
"""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import AngleGrid, DensityGrid, Domain, make_angle_grid
from .errors import ArgumentError
from .inversion import FbpConfig, nyquist, regularized_inverse
from .metrics import l2_distance, sliced_l2_per_angle
from .slicing import SlicedDensities, default_u_count, radon_grid


class SlicingTransform(ABC):
    name: str = ""

    @abstractmethod
    def forward(self, f: DensityGrid) -> SlicedDensities:
        """Slice a density; each row is a 1-D density."""

    @abstractmethod
    def regularized_inverse(self, lam: SlicedDensities, tau: float, domain: Domain, shape) -> DensityGrid:
        """Map slices back to a density grid with cutoff ``tau``."""

    def nyquist(self, f: DensityGrid) -> float:
        """Largest admissible cutoff for slices of ``f``."""
        raise NotImplementedError


@dataclass(frozen=True)
class RadonTransform(SlicingTransform):
    """Line-integral slicing over ``L`` equally spaced half-circle directions."""

    L: int = 180
    U: Optional[int] = None
    name: str = field(default="radon", init=False)

    @property
    def angles(self) -> AngleGrid:
        return make_angle_grid(2, self.L)

    def u_count(self, f: DensityGrid) -> int:
        return self.U or default_u_count(f.domain, f.shape)

    def forward(self, f: DensityGrid) -> SlicedDensities:
        return radon_grid(f, self.angles, self.u_count(f))

    def regularized_inverse(self, lam: SlicedDensities, tau: float, domain: Domain, shape) -> DensityGrid:
        return regularized_inverse(lam, FbpConfig(tau, shape, domain))

    def nyquist(self, f: DensityGrid) -> float:
        U = self.u_count(f)
        return nyquist(2.0 * f.domain.radius / (U - 1))


_REGISTRY = {"radon": RadonTransform}


def register_transform(name: str, factory) -> None:
    _REGISTRY[name] = factory


def get_transform(name: str = "radon", **kwargs) -> SlicingTransform:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ArgumentError(f"unknown slicing transform {name!r}; registered: {sorted(_REGISTRY)}")
    return factory(**kwargs)


def available_transforms() -> list[str]:
    return sorted(_REGISTRY)


def lipschitz_bound(domain: Domain) -> float:
    """``(2C)**((p-1)/2)`` with C the radius of a ball containing the domain.

    Each slice integrates along chords of length at most 2C, so Cauchy-Schwarz
    bounds the L2 norm of a slice difference by this factor times the L2 norm
    of the density difference.
    """
    return (2.0 * domain.radius) ** ((domain.dim - 1) / 2.0)


@dataclass
class ContractReport:
    transform: str
    bound: float
    pair_ratios: list  # (i, j, max per-angle ratio or None when the pair coincides)
    taus: list
    round_trip: list  # per density, sup errors aligned with taus
    slopes: list  # per density, log-log slope of error against tau

    @property
    def max_ratio(self) -> float:
        r = [x for _, _, x in self.pair_ratios if x is not None]
        return max(r) if r else float("nan")

    @property
    def all_finite(self) -> bool:
        vals = [x for _, _, x in self.pair_ratios if x is not None] + [e for row in self.round_trip for e in row]
        return bool(np.all(np.isfinite(vals)))

    def decreasing(self) -> list[bool]:
        return [bool(np.all(np.diff(row) < 0)) for row in self.round_trip]

    def to_dict(self) -> dict:
        return {
            "transform": self.transform,
            "bound": self.bound,
            "max_ratio": self.max_ratio,
            "pair_ratios": [list(p) for p in self.pair_ratios],
            "taus": self.taus,
            "round_trip": self.round_trip,
            "slopes": self.slopes,
            "decreasing": self.decreasing(),
            "all_finite": self.all_finite,
        }


def verify_contract(
    t: SlicingTransform, densities: Sequence[DensityGrid], taus: Optional[Sequence[float]] = None
) -> ContractReport:
    """Empirical contract diagnostics on a set of test densities sharing one grid.

    Ratios are ``||psi f_i - psi f_j|| / ||f_i - f_j||`` per direction (maximum
    reported); coinciding pairs are skipped. Round-trip sup errors are computed
    at ``taus`` (default Nyquist/8, /4, /2).
    """
    if len(densities) < 2:
        raise ArgumentError("contract verification needs at least two test densities")
    f0 = densities[0]
    for f in densities[1:]:
        if f.shape != f0.shape or not np.array_equal(f.domain.lower, f0.domain.lower):
            raise ArgumentError("test densities must share domain and grid")
    slices = [t.forward(f) for f in densities]
    pairs = []
    for i, j in itertools.combinations(range(len(densities)), 2):
        d = l2_distance(densities[i], densities[j])
        if d == 0:
            pairs.append((i, j, None))
            continue
        per_angle = sliced_l2_per_angle(slices[i], slices[j])
        pairs.append((i, j, float(per_angle.max() / d)))
    if taus is None:
        nq = t.nyquist(f0)
        taus = [nq / 8, nq / 4, nq / 2]
    taus = [float(x) for x in taus]
    errors, slopes = [], []
    for f, lam in zip(densities, slices):
        row = [float(np.max(np.abs(t.regularized_inverse(lam, tau, f.domain, f.shape).values - f.values))) for tau in taus]
        errors.append(row)
        if len(taus) > 1 and all(e > 0 for e in row):
            slopes.append(float(np.polyfit(np.log(taus), np.log(row), 1)[0]))
        else:
            slopes.append(float("nan"))
    return ContractReport(t.name, lipschitz_bound(f0.domain), pairs, taus, errors, slopes)
