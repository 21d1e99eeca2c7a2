"""The four regression estimators and prediction.

SAW estimators (GSAW, LSAW) minimize the weighted sliced Wasserstein Fréchet
objective directly over a cloud of particles by projected gradient descent.
SWW estimators (GSWW, LSWW) solve one weighted Fréchet problem per slice in
quantile space and map the fitted slices back through the regularized
inverse Radon transform.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .core import AngleGrid, DensityGrid, Domain, PointCloud, RegressionDataset, make_angle_grid
from .errors import (
    ArgumentError,
    BandwidthTooSmallError,
    DegenerateWeightsError,
    ExtrapolationWarning,
    FoldSkipWarning,
    RankDeficiencyError,
    StepSizeError,
)
from .frechet import GlobalWeightModel, LocalWeightModel, monotone_project
from .inversion import fbp_rows, normalize_values, tau_grid
from .metrics import sliced_wasserstein_sq
from .slicing import (
    SlicedQuantiles,
    default_u_grid,
    density_rows_from_quantiles,
    quantile_rows_from_density,
    quantiles_from_cloud,
    radon_batch,
    sorted_projections,
)

KINDS = ("GSAW", "LSAW", "GSWW", "LSWW")
BOX_EXPANSION = 0.1
DIVERGENCE_PATIENCE = 10
LOO_MAX_N = 30
N_FOLDS = 5
# u-points used to slice grid responses when scoring particle fits
SAW_GRID_U = 128


# --------------------------------------------------------------------------- configs


@dataclass(frozen=True)
class WeightScheme:
    """``kind`` is "global" or "local"; a local scheme with ``h=None`` selects h by cross-validation."""

    kind: str = "global"
    h: Optional[float] = None
    kernel: str = "gaussian"

    def __post_init__(self):
        if self.kind not in ("global", "local"):
            raise ArgumentError(f"weight scheme must be 'global' or 'local', got {self.kind!r}")
        if self.h is not None:
            h = float(self.h)
            if not (math.isfinite(h) and h > 0):
                raise ArgumentError(f"bandwidth h must be positive, got {self.h!r}")
            object.__setattr__(self, "h", h)

    @property
    def is_local(self) -> bool:
        return self.kind == "local"

    def model(self, X):
        if not self.is_local:
            return GlobalWeightModel(X)
        if self.h is None:
            raise ArgumentError("local weights need a bandwidth h")
        return LocalWeightModel(X, self.h, self.kernel)


GLOBAL = WeightScheme()


def local(h=None, kernel="gaussian") -> WeightScheme:
    return WeightScheme("local", h, kernel)


def default_h_grid(X) -> list[float]:
    """Bandwidths proportional to the predictor range."""
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    width = float(np.ptp(X[:, 0]))
    return [width * f for f in (0.05, 0.1, 0.2, 0.4)]


@dataclass(frozen=True)
class SawConfig:
    N_particles: Optional[int] = None
    learning_rate: float = 0.5
    convergence_threshold: float = 1e-4
    max_iters: int = 2000
    seed: int = 0
    L: int = 60
    S: int = 128

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ArgumentError(f"learning rate must be positive, got {self.learning_rate!r}")
        if not self.convergence_threshold > 0:
            raise ArgumentError(f"convergence threshold must be positive, got {self.convergence_threshold!r}")
        if int(self.max_iters) < 1:
            raise ArgumentError("max_iters must be at least 1")
        if self.N_particles is not None and int(self.N_particles) < 1:
            raise ArgumentError("N_particles must be at least 1")
        if int(self.S) < 1:
            raise ArgumentError("S must be at least 1")


@dataclass(frozen=True)
class SwwConfig:
    L: int = 60
    S: int = 128
    U: int = 128
    tau: Union[float, str] = "auto"
    output_shape: tuple = (64, 64)
    smoothing: Union[str, float] = "silverman"
    seed: int = 0
    tau_levels: int = 6

    def __post_init__(self):
        if int(self.S) < 1:
            raise ArgumentError("S must be at least 1")
        if int(self.U) < 8:
            raise ArgumentError(f"U must be at least 8, got {self.U}")
        if self.tau != "auto" and not float(self.tau) > 0:
            raise ArgumentError(f"tau must be positive or 'auto', got {self.tau!r}")
        object.__setattr__(self, "output_shape", tuple(int(s) for s in self.output_shape))
        if min(self.output_shape) < 8:
            raise ArgumentError(f"output grid sizes must be at least 8, got {self.output_shape}")

    def u_grid(self, domain: Domain) -> np.ndarray:
        return default_u_grid(domain, self.U)


# --------------------------------------------------------------------------- results


@dataclass
class CVResult:
    tau: Optional[float]
    h: Optional[float]
    score: float
    n_folds: int
    table: list = field(default_factory=list)


@dataclass
class FitResult:
    kind: str
    queries: np.ndarray
    outputs: list
    slices: list
    diagnostics: list
    dataset: RegressionDataset = field(repr=False)
    scheme: WeightScheme
    config: Union[SawConfig, SwwConfig]
    tau: Optional[float] = None
    cv: Optional[CVResult] = None

    @property
    def h(self) -> Optional[float]:
        return self.scheme.h

    def summary(self) -> dict:
        cfg = asdict(self.config)
        return {
            "kind": self.kind,
            "queries": self.queries.tolist(),
            "scheme": asdict(self.scheme),
            "config": cfg,
            "tau": self.tau,
            "diagnostics": self.diagnostics,
            "cv": None if self.cv is None else asdict(self.cv),
        }

    def to_directory(self, path) -> str:
        """Write ``fit.json`` plus per-query response and slice CSV files."""
        from .io import save_density_grid, save_pointcloud, save_sliced_quantiles

        os.makedirs(path, exist_ok=True)
        with open(os.path.join(path, "fit.json"), "w") as fh:
            json.dump(self.summary(), fh, indent=2)
        for k, out in enumerate(self.outputs):
            if isinstance(out, PointCloud):
                save_pointcloud(out, os.path.join(path, f"particles_{k}.csv"))
            else:
                save_density_grid(out, os.path.join(path, f"density_{k}.csv"))
            save_sliced_quantiles(self.slices[k], os.path.join(path, f"slices_{k}.csv"))
        return str(path)


def _queries(x_queries, q) -> np.ndarray:
    xq = np.asarray(x_queries, dtype=float)
    if xq.ndim == 0:
        xq = xq.reshape(1, 1)
    elif xq.ndim == 1:
        xq = xq.reshape(-1, 1) if q == 1 else xq.reshape(1, -1)
    if xq.ndim != 2 or xq.shape[1] != q or xq.shape[0] == 0:
        raise ArgumentError(f"queries must be an m x {q} array")
    if not np.all(np.isfinite(xq)):
        raise ArgumentError("queries must be finite")
    return xq


def _weights(model, x):
    return model.weights(x if x.size > 1 else x[0])


# --------------------------------------------------------------------------- SAW


def _as_cloud_stack(data) -> np.ndarray:
    if isinstance(data, np.ndarray) and data.ndim == 3:
        return data.astype(float)
    return np.stack([d.points if isinstance(d, PointCloud) else np.asarray(d, dtype=float) for d in data])


class _SawTargets:
    """Weighted sums of sorted data projections at one query."""

    def __init__(self, sorted_proj, weights, theta):
        s = np.asarray(weights, dtype=float)
        self.n = s.size
        self.s_sum = float(s.sum())
        self.B = np.tensordot(s, sorted_proj, axes=(0, 0))  # L x N
        self.C = float(np.tensordot(s, sorted_proj * sorted_proj, axes=(0, 0)).sum())
        self.theta = theta
        self.L, self.N = self.B.shape
        self._order = None  # flat indices into the L x N projection array
        self._offsets = (np.arange(self.L) * self.N)[:, None]

    def _sort(self, proj):
        # successive iterates are nearly sorted in the previous order, which timsort exploits;
        # exact ties fall back to a plain stable sort so they break by particle index
        flat = proj.ravel()
        if self._order is not None:
            prev = self._order
            order = prev.ravel()[np.argsort(flat[prev], axis=1, kind="stable") + self._offsets]
            ranked = flat[order]
            if np.all(ranked[:, 1:] > ranked[:, :-1]):
                self._order = order
                return order, ranked
        order = np.argsort(proj, axis=1, kind="stable") + self._offsets
        self._order = order
        return order, flat[order]

    def evaluate(self, W):
        """Objective ``(1/n) sum_i s_i d_SW^2(W, mu_i)`` and the N x p descent direction."""
        proj = self.theta @ W.T  # L x N, rows contiguous for sorting
        order, ranked = self._sort(proj)
        obj = (self.s_sum * np.sum(ranked * ranked) - 2.0 * np.sum(ranked * self.B) + self.C) / (
            self.n * self.L * self.N
        )
        aligned = np.empty(proj.size)
        aligned[order] = self.B
        grad = (self.s_sum * proj - aligned.reshape(proj.shape)).T @ self.theta / (self.n * self.L)
        return obj, grad


def saw_gradient(W, data, weights, angles: AngleGrid) -> np.ndarray:
    """Particle gradient ``(nL)^-1 sum_i sum_l s_i theta_l (W(theta_l) - aligned_i)'`` as a p x N matrix.

    ``W`` holds N particles as rows (N x p); ``data`` is a sequence of n clouds
    with N points each (or an (n, N, p) array). Alignment matches ranks of the
    sorted projections with a stable sort, so ties break by particle index.
    This equals ``N/2`` times the gradient of ``saw_objective``.
    """
    clouds = _as_cloud_stack(data)
    W = np.asarray(W, dtype=float)
    if clouds.shape[1:] != W.shape:
        raise ArgumentError(f"clouds must have shape (n, {W.shape[0]}, {W.shape[1]})")
    sp = np.stack([sorted_projections(c, angles) for c in clouds])
    return _SawTargets(sp, weights, angles.angles).evaluate(W)[1].T


def saw_objective(W, data, weights, angles: AngleGrid) -> float:
    """``(1/n) sum_i s_i d_SW^2(W, mu_i)`` for equal-size clouds."""
    clouds = _as_cloud_stack(data)
    sp = np.stack([sorted_projections(c, angles) for c in clouds])
    return float(_SawTargets(sp, weights, angles.angles).evaluate(np.asarray(W, dtype=float))[0])


def sample_density_grid(f: DensityGrid, N: int, rng) -> np.ndarray:
    """Inverse-CDF sampling of a piecewise-constant grid density, one axis at a time."""
    vals = f.values
    axes_lo = f.domain.lower
    widths = f.domain.cell_widths(f.shape)
    out = np.empty((N, f.domain.dim))
    for j in range(N):
        block = vals
        for k in range(f.domain.dim):
            marg = block.reshape(block.shape[0], -1).sum(axis=1)
            cdf = np.cumsum(marg)
            idx = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), marg.size - 1)
            out[j, k] = axes_lo[k] + (idx + rng.random()) * widths[k]
            block = block[idx]
    return out


def downsample(dataset: RegressionDataset, N: Optional[int], seed: int) -> np.ndarray:
    """(n, N, p) stack: seeded subsamples without replacement, or grid samples."""
    rng = np.random.default_rng(seed)
    if dataset.is_cloud:
        sizes = [r.N for r in dataset.responses]
        N = min(sizes) if N is None else int(N)
        if N > min(sizes):
            raise ArgumentError(f"N_particles={N} exceeds the smallest cloud size {min(sizes)}")
        out = []
        for r in dataset.responses:
            if r.N == N:
                out.append(r.points)
            else:
                out.append(r.points[rng.choice(r.N, N, replace=False)])
        return np.stack(out)
    if N is None:
        raise ArgumentError("grid responses need an explicit N_particles for particle fits")
    return np.stack([sample_density_grid(r, int(N), rng) for r in dataset.responses])


def _saw_descend(W0, targets: _SawTargets, cfg: SawConfig, box: Domain):
    W = W0.copy()
    eta = cfg.learning_rate
    trace = []
    ups = 0
    converged = False
    gnorm = float("nan")
    it = 0
    for it in range(1, cfg.max_iters + 1):
        obj, grad = targets.evaluate(W)
        gnorm = float(np.linalg.norm(grad))
        # clipping to the box turns divergence into oscillation, so iterates
        # stuck above the starting objective count as increases too
        if trace and (obj > trace[-1] or obj > trace[0]):
            ups += 1
            if ups >= DIVERGENCE_PATIENCE:
                raise StepSizeError(
                    f"objective failed to decrease for {DIVERGENCE_PATIENCE} consecutive iterations; "
                    f"use a learning rate smaller than {eta:g}"
                )
        else:
            ups = 0
        trace.append(float(obj))
        Wn = np.clip(W - eta * grad, box.lower, box.upper)
        rel = np.linalg.norm(Wn - W) / max(np.linalg.norm(W), np.finfo(float).tiny)
        W = Wn
        if rel < cfg.convergence_threshold:
            converged = True
            break
    trace.append(float(targets.evaluate(W)[0]))
    return W, {"iterations": it, "converged": converged, "gradient_norm": gnorm, "objective_trace": trace}


class _SawProblem:
    def __init__(self, dataset: RegressionDataset, scheme: WeightScheme, cfg: SawConfig):
        self.dataset = dataset
        self.cfg = cfg
        self.angles = make_angle_grid(dataset.p, cfg.L)
        self.clouds = downsample(dataset, cfg.N_particles, cfg.seed)
        self.sorted = np.stack([sorted_projections(c, self.angles) for c in self.clouds])
        self.model = scheme.model(dataset.predictors)
        self.box = dataset.domain.expanded(BOX_EXPANSION)

    def solve(self, x):
        s = _weights(self.model, x)
        if np.all(s == 0):
            raise DegenerateWeightsError("all weights are zero at this query")
        W0 = self.clouds[int(np.argmax(s))]
        W, diag = _saw_descend(W0, _SawTargets(self.sorted, s, self.angles.angles), self.cfg, self.box)
        return W, diag


def saw_fit(dataset: RegressionDataset, x_queries, weight_scheme: WeightScheme = GLOBAL, cfg: SawConfig = SawConfig()):
    """GSAW (global weights) or LSAW (local weights) fits at each query."""
    if weight_scheme.is_local and weight_scheme.h is None:
        cv = cross_validate(dataset, "LSAW", hs=default_h_grid(dataset.predictors), saw_cfg=cfg)
        weight_scheme = replace(weight_scheme, h=cv.h)
    else:
        cv = None
    xq = _queries(x_queries, dataset.q)
    problem = _SawProblem(dataset, weight_scheme, cfg)
    outputs, slices, diags = [], [], []
    for x in xq:
        W, diag = problem.solve(x)
        cloud = PointCloud(W)
        outputs.append(cloud)
        slices.append(quantiles_from_cloud(cloud, problem.angles, cfg.S))
        diags.append(diag)
    kind = "LSAW" if weight_scheme.is_local else "GSAW"
    return FitResult(kind, xq, outputs, slices, diags, dataset, weight_scheme, cfg, None, cv)


# --------------------------------------------------------------------------- SWW


def response_quantiles(dataset: RegressionDataset, angles: AngleGrid, S: int, U: int) -> np.ndarray:
    """(n, L, S) quantile slicings of all responses."""
    if dataset.is_cloud:
        return np.stack([quantiles_from_cloud(r, angles, S).values for r in dataset.responses])
    values = np.stack([r.values for r in dataset.responses])
    rows = radon_batch(values, dataset.domain, angles, U)
    return quantile_rows_from_density(rows, default_u_grid(dataset.domain, U), S)


def _fit_slices(Q, s_batch, bound) -> np.ndarray:
    """Projected weighted means for a batch of weight vectors: (B, n) -> (B, L, S)."""
    n = Q.shape[0]
    raw = np.tensordot(s_batch, Q, axes=(1, 0)) / n
    return np.clip(monotone_project(raw), -bound, bound)


def _slices_to_rows(fitted, u, smoothing) -> np.ndarray:
    B, L, S = fitted.shape
    return density_rows_from_quantiles(fitted.reshape(B * L, S), u, smoothing).reshape(B, L, u.size)


def _reconstruct(rows, u, angles, tau, domain, shape) -> np.ndarray:
    raw = fbp_rows(rows, u, angles, tau, domain, shape)
    return normalize_values(raw, domain.cell_volume(shape), domain.volume)


def reslice(values, domain: Domain, angles: AngleGrid, U: int, S: int) -> np.ndarray:
    """Quantile slicings of a stack of grid densities, (B, L, S)."""
    rows = radon_batch(values, domain, angles, U)
    return quantile_rows_from_density(rows, default_u_grid(domain, U), S)


def _resolve_tau(dataset, scheme, cfg: SwwConfig):
    if cfg.tau != "auto" and not (scheme.is_local and scheme.h is None):
        return float(cfg.tau), scheme, None
    kind = "LSWW" if scheme.is_local else "GSWW"
    taus = None if cfg.tau == "auto" else [float(cfg.tau)]
    hs = None
    if scheme.is_local:
        hs = [scheme.h] if scheme.h is not None else default_h_grid(dataset.predictors)
    cv = cross_validate(dataset, kind, taus=taus, hs=hs, sww_cfg=cfg)
    if scheme.is_local:
        scheme = replace(scheme, h=cv.h)
    return cv.tau, scheme, cv


def sww_fit(dataset: RegressionDataset, x_queries, weight_scheme: WeightScheme = GLOBAL, cfg: SwwConfig = SwwConfig()):
    """GSWW or LSWW: per-slice Fréchet fits, then regularized inversion to a density grid."""
    if dataset.p != 2:
        raise ArgumentError("SWW fits reconstruct densities for p = 2 only")
    tau, weight_scheme, cv = _resolve_tau(dataset, weight_scheme, cfg)
    xq = _queries(x_queries, dataset.q)
    angles = make_angle_grid(dataset.p, cfg.L)
    domain = dataset.domain
    u = cfg.u_grid(domain)
    Q = response_quantiles(dataset, angles, cfg.S, cfg.U)
    model = weight_scheme.model(dataset.predictors)
    s_batch = np.stack([_weights(model, x) for x in xq])
    for s in s_batch:
        if np.all(s == 0):
            raise DegenerateWeightsError("all weights are zero at a query")
    fitted = _fit_slices(Q, s_batch, domain.radius)
    rows = _slices_to_rows(fitted, u, cfg.smoothing)
    dens = _reconstruct(rows, u, angles, tau, domain, cfg.output_shape)
    outputs = [DensityGrid(domain, d) for d in dens]
    slices = [SlicedQuantiles(angles, f) for f in fitted]
    diags = [{"tau": tau, "h": weight_scheme.h} for _ in xq]
    kind = "LSWW" if weight_scheme.is_local else "GSWW"
    return FitResult(kind, xq, outputs, slices, diags, dataset, weight_scheme, cfg, tau, cv)


def reconstructed_quantiles(fit: FitResult, S: Optional[int] = None, U: Optional[int] = None) -> list:
    """Slicings of the fitted responses: particle quantiles for SAW, re-sliced densities for SWW."""
    if fit.kind in ("GSAW", "LSAW"):
        return list(fit.slices)
    cfg = fit.config
    angles = fit.slices[0].angle_grid
    vals = np.stack([o.values for o in fit.outputs])
    q = reslice(vals, fit.dataset.domain, angles, U or cfg.U, S or cfg.S)
    return [SlicedQuantiles(angles, r) for r in q]


# --------------------------------------------------------------------------- cross-validation


def cv_folds(n: int, seed: int = 0) -> list[np.ndarray]:
    """Leave-one-out for n <= 30, otherwise 5 folds from a seeded shuffle."""
    if n <= LOO_MAX_N:
        return [np.array([i]) for i in range(n)]
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, N_FOLDS)]


def _fold_weights(dataset, train, held, scheme):
    model = scheme.model(dataset.predictors[train])
    s = np.stack([_weights(model, dataset.predictors[i]) for i in held])
    if np.any(np.all(s == 0, axis=1)):
        raise DegenerateWeightsError("all weights are zero at a held-out predictor")
    return s


def cross_validate(
    dataset: RegressionDataset,
    kind: str,
    taus: Optional[Sequence[float]] = None,
    hs: Optional[Sequence[float]] = None,
    sww_cfg: SwwConfig = SwwConfig(),
    saw_cfg: SawConfig = SawConfig(),
    seed: Optional[int] = None,
    kernel: str = "gaussian",
) -> CVResult:
    """Select ``tau`` (SWW) and/or ``h`` (local) by minimizing held-out squared sliced distances.

    SWW predictions are scored through the slicing of the reconstructed density,
    which is what makes the score depend on ``tau``. Folds whose design is
    singular are skipped with a warning and counted in the table.
    """
    kind = kind.upper()
    if kind not in KINDS:
        raise ArgumentError(f"unknown model kind {kind!r}; choose from {KINDS}")
    is_local = kind.startswith("L")
    is_sww = kind.endswith("WW")
    if is_local:
        hs = list(hs) if hs is not None else default_h_grid(dataset.predictors)
        if not hs:
            raise ArgumentError("empty bandwidth grid")
    else:
        hs = [None]
    cfg = sww_cfg if is_sww else saw_cfg
    seed = cfg.seed if seed is None else seed
    folds = cv_folds(dataset.n, seed)
    n = dataset.n
    domain = dataset.domain
    angles = make_angle_grid(dataset.p, cfg.L)

    if is_sww:
        u = sww_cfg.u_grid(domain)
        taus = list(taus) if taus is not None else tau_grid(float(u[1] - u[0]), sww_cfg.tau_levels)
        if not taus:
            raise ArgumentError("empty tau grid")
        Q = truth_q = response_quantiles(dataset, angles, sww_cfg.S, sww_cfg.U)
    else:
        taus = [None]
        truth_q = response_quantiles(dataset, angles, saw_cfg.S, SAW_GRID_U)

    scores = np.zeros((len(hs), len(taus)))
    skipped = np.zeros(len(hs), dtype=int)
    for a, h in enumerate(hs):
        scheme = WeightScheme("local", h, kernel) if is_local else GLOBAL
        for held in folds:
            train = np.setdiff1d(np.arange(n), held)
            try:
                s = _fold_weights(dataset, train, held, scheme)
                if is_sww:
                    fitted = _fit_slices(Q[train], s, domain.radius)
                    rows = _slices_to_rows(fitted, u, sww_cfg.smoothing)
                    for b, tau in enumerate(taus):
                        dens = _reconstruct(rows, u, angles, tau, domain, sww_cfg.output_shape)
                        pred_q = reslice(dens, domain, angles, sww_cfg.U, sww_cfg.S)
                        scores[a, b] += float(np.sum(sliced_wasserstein_sq(pred_q, truth_q[held])))
                else:
                    problem = _SawProblem(dataset.subset(train), scheme, saw_cfg)
                    for j, i in enumerate(held):
                        W, _ = _saw_descend(
                            problem.clouds[int(np.argmax(s[j]))],
                            _SawTargets(problem.sorted, s[j], problem.angles.angles),
                            saw_cfg,
                            problem.box,
                        )
                        pq = quantiles_from_cloud(PointCloud(W), angles, saw_cfg.S).values
                        scores[a, 0] += float(sliced_wasserstein_sq(pq, truth_q[i]))
            except (RankDeficiencyError, BandwidthTooSmallError, DegenerateWeightsError) as exc:
                skipped[a] += 1
                warnings.warn(f"skipping fold {held.tolist()} (h={h}): {exc}", FoldSkipWarning, stacklevel=2)

    table = []
    for a, h in enumerate(hs):
        for b, tau in enumerate(taus):
            table.append({"tau": tau, "h": h, "score": float(scores[a, b]), "skipped_folds": int(skipped[a])})
    usable = [r for r in table if r["skipped_folds"] < len(folds)]
    if not usable:
        raise RankDeficiencyError("every cross-validation fold was singular")
    fewest = min(r["skipped_folds"] for r in usable)
    best = min((r for r in usable if r["skipped_folds"] == fewest), key=lambda r: r["score"])
    return CVResult(best["tau"], best["h"], best["score"], len(folds), table)


# --------------------------------------------------------------------------- prediction


def fit(dataset, x_queries, kind: str, h: Optional[float] = None, sww_cfg=SwwConfig(), saw_cfg=SawConfig()):
    """Dispatch on the model name (GSAW, LSAW, GSWW, LSWW)."""
    kind = kind.upper()
    if kind not in KINDS:
        raise ArgumentError(f"unknown model kind {kind!r}; choose from {KINDS}")
    scheme = local(h) if kind.startswith("L") else GLOBAL
    if kind.endswith("AW"):
        return saw_fit(dataset, x_queries, scheme, saw_cfg)
    return sww_fit(dataset, x_queries, scheme, sww_cfg)


def predict(fit_result: FitResult, x_new) -> FitResult:
    """Re-run the fit at new queries with the resolved tau and h; local models warn outside the data range."""
    ds = fit_result.dataset
    xq = _queries(x_new, ds.q)
    if fit_result.scheme.is_local:
        lo, hi = ds.predictors.min(axis=0), ds.predictors.max(axis=0)
        if np.any(xq < lo) or np.any(xq > hi):
            warnings.warn(
                "query lies outside the predictor range of the data; local fit is extrapolating",
                ExtrapolationWarning,
                stacklevel=2,
            )
    if fit_result.kind.endswith("AW"):
        return saw_fit(ds, xq, fit_result.scheme, fit_result.config)
    cfg = replace(fit_result.config, tau=fit_result.tau)
    res = sww_fit(ds, xq, fit_result.scheme, cfg)
    res.cv = fit_result.cv
    return res


def fitted_sw_r2(fit_result: FitResult) -> float:
    """Sliced Wasserstein R^2 of the fit evaluated at the observed predictors."""
    from .metrics import sw_r2

    ds = fit_result.dataset
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExtrapolationWarning)
        at_data = predict(fit_result, ds.predictors)
    angles = at_data.slices[0].angle_grid
    cfg = fit_result.config
    U = cfg.U if isinstance(cfg, SwwConfig) else SAW_GRID_U
    resp = [SlicedQuantiles(angles, q) for q in response_quantiles(ds, angles, cfg.S, U)]
    return sw_r2(resp, reconstructed_quantiles(at_data))

