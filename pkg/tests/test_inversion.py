import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swreg.core import Domain, make_angle_grid
from swreg.errors import ArgumentError, CutoffTooLargeError
from swreg.inversion import (
    FbpConfig,
    fbp_inverse,
    fbp_rows,
    fft_1d,
    normalize_to_density,
    nyquist,
    reconstruction_error_curve,
    round_trip,
    tau_grid,
)
from swreg.slicing import default_u_count, radon_grid

from .conftest import gaussian_blob


def test_fft_of_impulse_is_flat():
    x = np.zeros(64)
    x[0] = 1.0
    r, spec = fft_1d(x, 0.1)
    np.testing.assert_allclose(spec, 0.1, atol=1e-15)


def test_fft_gaussian_pair():
    u = np.linspace(-10, 10, 801)
    du = u[1] - u[0]
    r, spec = fft_1d(np.exp(-0.5 * u * u), du, origin=u[0])
    keep = np.abs(r) <= 6
    exact = math.sqrt(2 * math.pi) * np.exp(-0.5 * r[keep] ** 2)
    assert np.max(np.abs(spec[keep] - exact)) <= 1e-3


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 200), st.floats(0.01, 2.0), st.integers(0, 10_000))
def test_fft_parseval(n, du, seed):
    x = np.random.default_rng(seed).normal(size=n)
    r, spec = fft_1d(x, du)
    M = spec.size
    lhs = du * np.sum(x * x)
    rhs = np.sum(np.abs(spec) ** 2) / (M * du)
    assert lhs == pytest.approx(rhs, rel=1e-8)


def test_tau_grid_halves_from_nyquist():
    g = tau_grid(0.01, 4)
    assert g[0] == pytest.approx(nyquist(0.01)) and g[0] == pytest.approx(math.pi / 0.01)
    np.testing.assert_allclose(np.array(g[1:]) / np.array(g[:-1]), 0.5)


def test_round_trip_of_smooth_blob(square):
    f = gaussian_blob((128, 128), 0.3)
    tau = nyquist(2 * square.radius / (default_u_count(square, f.shape) - 1))
    rec = round_trip(f, tau)
    assert np.max(np.abs(rec.values - f.values)) <= 5e-2


def test_reconstruction_of_isotropic_blob_is_symmetric(square):
    f = gaussian_blob((128, 128), 0.3)
    rec = round_trip(f, 100.0).values
    for other in (rec.T, rec[::-1], rec[:, ::-1]):
        assert np.max(np.abs(rec - other)) <= 2e-2


def test_small_cutoff_is_worse(square):
    f = gaussian_blob((64, 64), 0.2)
    (t1, e1), (t2, e2) = reconstruction_error_curve(f, [8.0, 60.0])
    assert e1 > e2


def test_cutoff_above_nyquist_raises(square):
    f = gaussian_blob((32, 32), 0.3)
    lam = radon_grid(f, make_angle_grid(2, 16), 65)
    with pytest.raises(CutoffTooLargeError):
        fbp_inverse(lam, FbpConfig(10 * nyquist(lam.du), (32, 32), square))


def test_nonpositive_cutoff_rejected(square):
    with pytest.raises(ArgumentError):
        FbpConfig(0.0, (8, 8), square)


def test_fbp_is_linear(square, rng):
    angles = make_angle_grid(2, 12)
    u = np.linspace(-square.radius, square.radius, 41)
    a, b = rng.random((2, 12, 41))
    out = fbp_rows(2.5 * a - 0.7 * b, u, angles, 20.0, square, (24, 24))
    ref = 2.5 * fbp_rows(a, u, angles, 20.0, square, (24, 24)) - 0.7 * fbp_rows(b, u, angles, 20.0, square, (24, 24))
    assert np.max(np.abs(out - ref)) <= 1e-8


def test_batched_and_single_fbp_agree(square, rng):
    angles = make_angle_grid(2, 10)
    u = np.linspace(-square.radius, square.radius, 33)
    rows = rng.random((3, 10, 33))
    batched = fbp_rows(rows, u, angles, 15.0, square, (16, 16))
    for k in range(3):
        np.testing.assert_allclose(batched[k], fbp_rows(rows[k], u, angles, 15.0, square, (16, 16)), atol=1e-12)


def test_normalize_is_idempotent_on_densities(square):
    f = gaussian_blob((32, 32), 0.4)
    np.testing.assert_allclose(normalize_to_density(f.values, square).values, f.values, rtol=1e-12)


def test_normalize_zero_gives_uniform(square):
    g = normalize_to_density(np.zeros((16, 16)), square)
    np.testing.assert_allclose(g.values, 0.25)


def test_normalize_takes_absolute_value():
    dom = Domain(np.zeros(2), np.ones(2))
    g = normalize_to_density(np.array([[1.0, -1.0], [2.0, -4.0]]), dom)
    np.testing.assert_allclose(g.values, np.array([[1, 1], [2, 4]]) / 2.0)
    assert g.mass() == pytest.approx(1.0)


def test_moderate_grid_round_trip_is_fast(square):
    f = gaussian_blob((128, 128), 0.3)
    t0 = time.perf_counter()
    round_trip(f, 100.0)
    assert time.perf_counter() - t0 < 10.0
