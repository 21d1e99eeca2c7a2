import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from swreg.core import AngleGrid, DensityGrid, PointCloud, make_angle_grid
from swreg.errors import GridError, MonotonicityError, ResolutionError
from swreg.metrics import wasserstein_1d
from swreg.slicing import (
    SlicedDensities,
    SlicedQuantiles,
    default_u_grid,
    density_from_quantiles,
    prob_grid,
    quantiles_from_cloud,
    quantiles_from_density,
    radon_grid,
    slice_pointcloud,
)

from .conftest import gaussian_blob


def test_slice_pointcloud_examples():
    cloud = PointCloud(np.array([[1.0, 0.0], [0.0, 1.0]]))
    np.testing.assert_array_equal(slice_pointcloud(cloud, [1.0, 0.0]), [0.0, 1.0])
    s = np.sqrt(2) / 2
    np.testing.assert_allclose(slice_pointcloud(PointCloud(np.array([[1.0, 1.0]])), [s, s]), [np.sqrt(2)])


def test_slice_at_opposite_direction_is_reversed_negative(rng):
    cloud = PointCloud(rng.normal(size=(17, 2)))
    theta = np.array([0.6, 0.8])
    np.testing.assert_allclose(slice_pointcloud(cloud, -theta), -slice_pointcloud(cloud, theta)[::-1])


def test_prob_grid_midpoints():
    np.testing.assert_allclose(prob_grid(4), [0.125, 0.375, 0.625, 0.875])


def test_dirac_cloud_quantiles_are_constant():
    g = make_angle_grid(2, 6)
    q = quantiles_from_cloud(PointCloud(np.array([[0.3, -0.7]])), g, 9)
    np.testing.assert_allclose(q.values, np.repeat((g.angles @ [0.3, -0.7])[:, None], 9, axis=1), atol=1e-15)


def test_quantiles_equal_sorted_projections_when_S_equals_N(rng):
    pts = rng.normal(size=(7, 2))
    g = make_angle_grid(2, 5)
    q = quantiles_from_cloud(PointCloud(pts), g, 7)
    np.testing.assert_array_equal(q.values, np.sort(pts @ g.angles.T, axis=0).T)


def _brute_quantile(sample, s):
    xs = np.sort(sample)
    cdf = np.arange(1, xs.size + 1) / xs.size
    return np.array([xs[np.argmax(cdf >= t - 1e-15)] for t in s])


def test_quantiles_match_brute_force_cdf_inversion(rng):
    pts = rng.normal(size=(4, 2))
    g = make_angle_grid(2, 8)
    q = quantiles_from_cloud(PointCloud(pts), g, 101)
    s = prob_grid(101)
    proj = pts @ g.angles.T
    for l in range(g.L):
        np.testing.assert_array_equal(q.values[l], _brute_quantile(proj[:, l], s))


@settings(max_examples=50, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(1, 30), st.just(2)), elements=st.floats(-5, 5)),
    st.integers(1, 64),
)
def test_cloud_quantile_rows_nondecreasing(points, S):
    q = quantiles_from_cloud(PointCloud(points), make_angle_grid(2, 7), S)
    assert np.all(np.diff(q.values, axis=1) >= 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(1, 4), st.integers(0, 10_000))
def test_quantile_distance_equals_sorted_sample_formula(N, mult, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=(2, N, 2))
    g = make_angle_grid(2, 3)
    qa = quantiles_from_cloud(PointCloud(a), g, N * mult)
    qb = quantiles_from_cloud(PointCloud(b), g, N * mult)
    for l, theta in enumerate(g.angles):
        direct = np.sqrt(np.mean((np.sort(a @ theta) - np.sort(b @ theta)) ** 2))
        assert wasserstein_1d(qa.values[l], qb.values[l]) == pytest.approx(direct, rel=1e-12, abs=1e-15)


def test_sliced_quantiles_reject_decreasing_rows():
    with pytest.raises(MonotonicityError):
        SlicedQuantiles(make_angle_grid(2, 2), np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_radon_of_unit_disk_is_chord_length(square):
    z = square.mesh((256, 256))
    disk = (np.sum(z**2, axis=-1) <= 1.0).astype(float)
    f = DensityGrid(square, disk, normalize=True)
    lam = radon_grid(f, make_angle_grid(2, 8), 256)
    u = lam.u_grid
    chord = np.where(np.abs(u) < 1, 2 / np.pi * np.sqrt(np.clip(1 - u**2, 0, None)), 0.0)
    assert np.max(np.abs(lam.values - chord)) <= 2e-2


def test_radon_of_isotropic_gaussian_is_normal(square):
    sigma = 0.25
    f = gaussian_blob((256, 256), sigma)
    lam = radon_grid(f, make_angle_grid(2, 8), 256)
    u = lam.u_grid
    standard = sigma * lam.values
    phi = np.exp(-0.5 * (u / sigma) ** 2) / np.sqrt(2 * np.pi)
    assert np.max(np.abs(standard - phi)) <= 2e-2


def test_radon_rows_have_unit_mass_and_evenness(square):
    f = gaussian_blob((64, 64), 0.2, center=(0.3, -0.1))
    alphas = np.pi * np.arange(6) / 6
    doubled = AngleGrid.from_radians(np.concatenate([alphas, alphas + np.pi]))
    lam = radon_grid(f, doubled, 97)
    mass = lam.values.sum(axis=1) * lam.du
    np.testing.assert_allclose(mass, 1.0, atol=1e-6)
    np.testing.assert_allclose(lam.values[6:], lam.values[:6, ::-1], atol=1e-10)


def test_radon_resolution_floor(square):
    with pytest.raises(ResolutionError):
        radon_grid(gaussian_blob((16, 16), 0.3), make_angle_grid(2, 4), 4)


def _row_densities(u, rows):
    rows = np.asarray(rows, dtype=float)
    rows = rows / (rows.sum(axis=1, keepdims=True) * (u[1] - u[0]))
    return SlicedDensities(make_angle_grid(2, len(rows)), u, rows)


def test_uniform_density_quantiles_are_identity():
    u = np.linspace(0, 1, 257)
    q = quantiles_from_density(_row_densities(u, [np.ones(257), np.ones(257)]), 50)
    np.testing.assert_allclose(q.values, np.tile(prob_grid(50), (2, 1)), atol=1e-6)


def test_linear_density_quantiles_are_square_root():
    u = np.linspace(0, 1, 512)
    q = quantiles_from_density(_row_densities(u, [2 * u, 2 * u]), 200)
    assert np.max(np.abs(q.values - np.sqrt(prob_grid(200)))) <= 1e-3


def test_density_quantile_round_trip_for_smooth_rows():
    u = np.linspace(-2, 2, 256)
    row = np.exp(-0.5 * (u / 0.5) ** 2)
    row /= row.sum() * (u[1] - u[0])
    lam = _row_densities(u, [row] * 4)
    back = density_from_quantiles(quantiles_from_density(lam, 512), 256, "silverman", u_range=(-2, 2))
    assert np.max(np.abs(back.values - lam.values)) <= 5e-2


def test_constant_quantile_row_puts_mass_in_one_cell():
    g = SlicedQuantiles(make_angle_grid(2, 2), np.full((2, 16), 0.3))
    lam = density_from_quantiles(g, 32, "none", u_range=(-1, 1))
    k = int(np.argmin(np.abs(lam.u_grid - 0.3)))
    for row in lam.values:
        assert np.count_nonzero(row) == 1
        assert row[k] * lam.du == pytest.approx(1.0)


def test_uniform_quantiles_histogram_is_flat():
    g = SlicedQuantiles(make_angle_grid(2, 2), np.tile(prob_grid(10_000), (2, 1)))
    lam = density_from_quantiles(g, 64, "none")
    u = lam.u_grid
    inner = (u - lam.du / 2 >= 0) & (u + lam.du / 2 <= 1)
    assert np.max(np.abs(lam.values[:, inner] - 1.0)) <= 0.05


def test_density_from_quantiles_resolution_floor():
    g = make_angle_grid(2, 2)
    ok = SlicedQuantiles(g, np.array([[0.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ResolutionError):
        density_from_quantiles(ok, 4)


def test_sliced_densities_reject_uneven_grid():
    with pytest.raises(GridError):
        SlicedDensities(make_angle_grid(2, 2), np.array([0.0, 0.1, 0.3, 0.4]), np.ones((2, 4)))


def test_default_u_grid_covers_domain(square):
    u = default_u_grid(square, 11)
    assert u[0] == pytest.approx(-np.sqrt(2)) and u[-1] == pytest.approx(np.sqrt(2))
