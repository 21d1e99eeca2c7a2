
import numpy as np
import pytest

from swreg.errors import ArgumentError
from swreg.simulation import (
    ROTATION,
    ScenarioSpec,
    TruthMap,
    covariance,
    eigen_mean,
    mean_vector,
    query_grid,
    run_table,
    sample_scenario,
    scenario_name,
    truncated_gaussian,
)


def test_scenario_names():
    assert scenario_name(1) == "sc1" and scenario_name("SC2") == "sc2"
    with pytest.raises(ArgumentError):
        scenario_name(3)


def test_rotation_is_orthogonal():
    np.testing.assert_allclose(ROTATION @ ROTATION.T, np.eye(2), atol=1e-15)


def test_covariance_moments_from_draws(rng):
    xi = 0.01 * eigen_mean("sc1", 0.2)
    cov = covariance(xi)
    z = rng.multivariate_normal(np.zeros(2), cov, size=100_000)
    np.testing.assert_allclose(np.cov(z.T), cov, atol=5e-4)
    np.testing.assert_allclose(np.linalg.eigvalsh(cov), np.sort(xi), rtol=1e-12)


def test_mean_vectors():
    np.testing.assert_allclose(mean_vector("sc1", 0.25), [0.1, 0.1])
    np.testing.assert_allclose(mean_vector("sc2", 0.25), [0.1, 0.05])
    np.testing.assert_allclose(eigen_mean("sc2", 0.5), [1.0, 0.75])


def test_truncation_respected(rng):
    pts = truncated_gaussian(np.array([0.9, -0.9]), 0.25 * np.eye(2), 500, rng)
    assert pts.shape == (500, 2)
    assert np.all(np.abs(pts) <= 1.0)


def test_sample_scenario_is_seeded():
    spec = ScenarioSpec("sc2", n=5, N=20, seed=4)
    a, truth = sample_scenario(spec)
    b, _ = sample_scenario(spec)
    for ra, rb in zip(a.responses, b.responses):
        np.testing.assert_array_equal(ra.points, rb.points)
    assert np.all((a.predictors >= -0.5) & (a.predictors <= 0.5))
    assert truth(0.1).values.shape == (60, 128)


def test_truth_map_is_deterministic_per_x():
    t = TruthMap("sc1", L=8, S=16, draws=500)
    np.testing.assert_array_equal(t.cloud(0.3), t.cloud(0.3))
    assert not np.array_equal(t.cloud(0.3), t.cloud(-0.3))


def test_query_grid():
    g = query_grid()
    assert g.size == 21 and g[0] == -0.5 and g[-1] == 0.5


def _truth_fitter(L=8, S=16, draws=500):
    t = TruthMap("sc1", L=L, S=S, draws=draws)
    return lambda ds, xs: [t(x) for x in xs]


def test_injected_truth_has_zero_error():
    from swreg.regressors import SwwConfig

    cfg = SwwConfig(L=8, S=16)
    table = run_table("sc1", ["oracle"], [10], [10], runs=2, fitters={"ORACLE": _truth_fitter()}, sww_cfg=cfg, truth_draws=500)
    assert table.rows[0].values == [0.0, 0.0]


def test_table_is_reproducible_and_worker_invariant():
    from swreg.regressors import SawConfig, SwwConfig

    kw = dict(
        methods=["GSAW"],
        n_list=[10],
        N_list=[10],
        runs=2,
        seed=3,
        x_grid=np.linspace(-0.5, 0.5, 3),
        sww_cfg=SwwConfig(L=8, S=16),
        saw_cfg=SawConfig(L=8, S=16),
        truth_draws=500,
    )
    one = run_table("sc1", workers=1, **kw)
    two = run_table("sc1", workers=2, **kw)
    assert one.rows[0].values == two.rows[0].values
    assert one.to_csv() == run_table("sc1", workers=1, **kw).to_csv()
    assert one.to_csv().splitlines()[0] == "method,n,N,emiswe_e4,stderr_e4,runs"


def test_run_table_validates():
    with pytest.raises(ArgumentError):
        run_table("sc1", ["NOPE"], runs=1)
    with pytest.raises(ArgumentError):
        run_table("sc1", ["GSAW"], runs=0)


@pytest.mark.slow
def test_gsww_error_decreases_with_cloud_size():
    from swreg.regressors import SwwConfig

    cfg = SwwConfig(L=30, S=64)
    table = run_table("sc1", ["GSWW"], [50], [20, 200], runs=4, seed=1, sww_cfg=cfg, x_grid=np.linspace(-0.5, 0.5, 5))
    assert table.row("GSWW", 50, 200).emiswe < table.row("GSWW", 50, 20).emiswe
