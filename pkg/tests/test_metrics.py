import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swreg.core import PointCloud, make_angle_grid
from swreg.errors import DegenerateVarianceError, GridError, MonotonicityError
from swreg.metrics import emiswe, frechet_mean, sliced_wasserstein, sw_r2, wasserstein_1d
from swreg.slicing import prob_grid, quantiles_from_cloud


def _cloud_q(points, L=16, S=32):
    return quantiles_from_cloud(PointCloud(np.atleast_2d(points)), make_angle_grid(2, L), S)


def test_uniform_versus_point_mass():
    s = prob_grid(512)
    assert wasserstein_1d(s, np.zeros(512)) == pytest.approx(1 / math.sqrt(3), abs=1e-5)


def test_dirac_pair_squared_distance():
    d = sliced_wasserstein(_cloud_q([0.0, 0.0]), _cloud_q([0.01, 0.0])).value
    assert d * d == pytest.approx(5e-5, rel=1e-10)


def test_translation_is_norm_over_root_two(rng):
    pts = rng.normal(size=(40, 2))
    v = np.array([0.3, -0.4])
    d = sliced_wasserstein(_cloud_q(pts), _cloud_q(pts + v)).value
    assert d == pytest.approx(np.linalg.norm(v) / math.sqrt(2), rel=1e-10)


def test_distance_is_translation_invariant(rng):
    a, b = rng.normal(size=(2, 30, 2))
    v = np.array([1.5, 0.2])
    d0 = sliced_wasserstein(_cloud_q(a), _cloud_q(b)).value
    d1 = sliced_wasserstein(_cloud_q(a + v), _cloud_q(b + v)).value
    assert d0 == pytest.approx(d1, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31))
def test_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (_cloud_q(rng.normal(size=(8, 2)) * rng.uniform(0.1, 3), L=6, S=8) for _ in range(3))
    ab = sliced_wasserstein(a, b).value
    bc = sliced_wasserstein(b, c).value
    ac = sliced_wasserstein(a, c).value
    assert ac <= ab + bc + 1e-12
    assert sliced_wasserstein(a, a).value == 0.0
    assert ab == pytest.approx(sliced_wasserstein(b, a).value, rel=1e-14)


def test_grid_mismatch_rejected():
    a = _cloud_q([0.0, 0.0], L=4)
    with pytest.raises(GridError):
        sliced_wasserstein(a, _cloud_q([0.0, 0.0], L=5))
    with pytest.raises(GridError):
        sliced_wasserstein(a, _cloud_q([0.0, 0.0], L=4, S=7))


def test_wasserstein_rejects_decreasing_rows():
    with pytest.raises(MonotonicityError):
        wasserstein_1d([1.0, 0.0], [0.0, 1.0])


def test_emiswe_with_callables_and_sequences():
    truth = lambda x: _cloud_q([x, 0.0])
    fitted = [_cloud_q([x + 0.01, 0.0]) for x in (0.0, 0.5)]
    assert emiswe(fitted, truth, [0.0, 0.5]) == pytest.approx(5e-5, rel=1e-8)
    assert emiswe(truth, truth, [0.1, 0.2]) == 0.0


def test_frechet_mean_of_translates():
    qs = [_cloud_q([x, 0.0]) for x in (-1.0, 0.0, 4.0)]
    np.testing.assert_allclose(frechet_mean(qs).values, _cloud_q([1.0, 0.0]).values, atol=1e-14)


def test_sw_r2_endpoints(rng):
    qs = [_cloud_q(rng.normal(size=(10, 2)) + rng.normal(size=2)) for _ in range(6)]
    assert sw_r2(qs, qs) == 1.0
    mean = frechet_mean(qs)
    assert sw_r2(qs, [mean] * 6) == pytest.approx(0.0, abs=1e-12)


def test_sw_r2_needs_spread():
    q = _cloud_q([0.0, 0.0])
    with pytest.raises(DegenerateVarianceError):
        sw_r2([q, q], [q, q])
