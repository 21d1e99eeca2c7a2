import json

import numpy as np
import pytest

from swreg.core import Domain, PointCloud, RegressionDataset, make_angle_grid
from swreg.errors import ParseError, SchemaError
from swreg.io import (
    load_dataset,
    load_density_grid,
    load_pointcloud,
    load_sliced_densities,
    load_sliced_quantiles,
    save_dataset,
    save_density_grid,
    save_pointcloud,
    save_sliced_densities,
    save_sliced_quantiles,
)
from swreg.slicing import quantiles_from_cloud, radon_grid

from .conftest import gaussian_blob

LONG = """sample_id,x1,z1,z2
a,0.5,0.1,0.2
a,0.5,-0.3,0.4
b,1.5,0.0,0.0
"""


def test_long_csv_example(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text(LONG)
    ds = load_dataset(p)
    assert ds.n == 2 and ds.q == 1 and ds.p == 2
    assert ds.sample_ids == ("a", "b")
    np.testing.assert_array_equal(ds.predictors[:, 0], [0.5, 1.5])
    np.testing.assert_array_equal(ds.responses[0].points, [[0.1, 0.2], [-0.3, 0.4]])
    assert np.all(ds.domain.contains(np.vstack([r.points for r in ds.responses])))


def test_nan_is_reported_with_line(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text(LONG.replace("-0.3", "nan"))
    with pytest.raises(ParseError) as exc:
        load_dataset(p)
    assert exc.value.line == 3
    assert "3" in str(exc.value)


def test_bad_header_and_inconsistent_predictors(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("id,x1,z1\n")
    with pytest.raises(ParseError):
        load_dataset(p)
    p.write_text(LONG.replace("a,0.5,-0.3", "a,0.7,-0.3"))
    with pytest.raises(ParseError):
        load_dataset(p)
    with pytest.raises(SchemaError):
        load_dataset(tmp_path / "missing.csv")


def test_long_csv_round_trip_is_exact(tmp_path, rng):
    clouds = tuple(PointCloud(rng.normal(size=(7, 2))) for _ in range(3))
    ds = RegressionDataset(rng.normal(size=3), clouds, Domain.square(5.0), ("u", "v", "w"))
    save_dataset(ds, tmp_path / "d.csv")
    back = load_dataset(tmp_path / "d.csv", domain=ds.domain)
    np.testing.assert_array_equal(back.predictors, ds.predictors)
    for a, b in zip(ds.responses, back.responses):
        np.testing.assert_array_equal(a.points, b.points)


def test_grid_dir_round_trip(tmp_path, square):
    grids = tuple(gaussian_blob((12, 10), s) for s in (0.2, 0.4))
    ds = RegressionDataset(np.array([0.0, 1.0]), grids, square, ("g0", "g1"))
    save_dataset(ds, tmp_path / "grid")
    meta = json.loads((tmp_path / "grid" / "meta.json").read_text())
    assert meta["shape"] == [12, 10]
    back = load_dataset(tmp_path / "grid")
    assert not back.is_cloud and back.sample_ids == ("g0", "g1")
    for a, b in zip(grids, back.responses):
        np.testing.assert_allclose(a.values, b.values, rtol=1e-14)


def test_single_object_round_trips(tmp_path, rng, square):
    cloud = PointCloud(rng.normal(size=(9, 2)))
    save_pointcloud(cloud, tmp_path / "c.csv")
    np.testing.assert_array_equal(load_pointcloud(tmp_path / "c.csv").points, cloud.points)

    f = gaussian_blob((16, 16), 0.3)
    save_density_grid(f, tmp_path / "f.csv")
    np.testing.assert_allclose(load_density_grid(tmp_path / "f.csv").values, f.values, rtol=1e-14)

    q = quantiles_from_cloud(cloud, make_angle_grid(2, 5), 12)
    save_sliced_quantiles(q, tmp_path / "q.csv")
    qb = load_sliced_quantiles(tmp_path / "q.csv")
    np.testing.assert_array_equal(qb.values, q.values)
    assert qb.angle_grid.same_as(q.angle_grid)

    lam = radon_grid(f, make_angle_grid(2, 6), 45)
    save_sliced_densities(lam, tmp_path / "s.csv")
    lb = load_sliced_densities(tmp_path / "s.csv")
    np.testing.assert_array_equal(lb.values, lam.values)
    np.testing.assert_array_equal(lb.u_grid, lam.u_grid)


def test_wrong_file_type_rejected(tmp_path):
    save_density_grid(gaussian_blob((8, 8), 0.3), tmp_path / "f.csv")
    with pytest.raises(SchemaError):
        load_sliced_quantiles(tmp_path / "f.csv")
