import numpy as np
import pytest

from swreg.errors import ArgumentError
from swreg.xtransform import (
    RadonTransform,
    available_transforms,
    get_transform,
    lipschitz_bound,
    register_transform,
    verify_contract,
)

from .conftest import gaussian_blob


def test_lipschitz_bound_for_square(square):
    assert lipschitz_bound(square) == pytest.approx((2 * np.sqrt(2)) ** 0.5)


def test_forward_rows_are_densities():
    lam = RadonTransform(L=12).forward(gaussian_blob((32, 32), 0.3))
    assert np.all(lam.values >= 0)
    np.testing.assert_allclose(lam.values.sum(axis=1) * lam.du, 1.0, atol=1e-6)


def test_ratios_within_bound_and_identical_pair_skipped():
    fs = [gaussian_blob((32, 32), 0.3), gaussian_blob((32, 32), 0.2, (0.3, 0.1)), gaussian_blob((32, 32), 0.3)]
    rep = verify_contract(RadonTransform(L=30), fs, taus=[20.0, 40.0])
    assert rep.all_finite
    assert rep.max_ratio <= 1.1 * rep.bound
    assert (0, 2, None) in [tuple(p) for p in rep.pair_ratios]
    assert rep.to_dict()["transform"] == "radon"


def test_round_trip_errors_decrease_with_cutoff():
    fs = [gaussian_blob((128, 128), 0.3), gaussian_blob((128, 128), 0.3, (0.2, -0.1))]
    rep = verify_contract(RadonTransform(), fs)
    assert rep.decreasing() == [True, True]
    assert all(s < 0 for s in rep.slopes)


def test_needs_two_densities():
    with pytest.raises(ArgumentError):
        verify_contract(RadonTransform(), [gaussian_blob()])


def test_registry():
    t = get_transform("radon", L=10)
    assert isinstance(t, RadonTransform) and t.L == 10
    assert get_transform("radon", L=10) == t
    assert "radon" in available_transforms()
    with pytest.raises(ArgumentError):
        get_transform("circular")
    register_transform("radon-coarse", lambda: RadonTransform(L=8))
    assert get_transform("radon-coarse").L == 8
