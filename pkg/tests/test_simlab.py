import numpy as np
import pytest

from dgcm.engine import TestConfig, make_rng
from dgcm.errors import DataError
from dgcm.simlab import (
    DgpSpec,
    ReplicationPlan,
    _shock_pair,
    f_corr,
    g_corr,
    generate,
    oracle_means,
    rate_rows,
    rejection_rates,
    replication_seeds,
    tvar1,
)


def test_regression_function_examples():
    u = np.linspace(0, 1, 11)
    for K in (1, 2, 5):
        assert np.all(f_corr(0.0, u, K) == 0.0)
        np.testing.assert_allclose(g_corr(0.0, u, K), 0.3 + 0.15 * np.sin(np.pi * u), rtol=1e-15)


def test_uncorrelated_shocks():
    e1, e2 = _shock_pair(np.random.default_rng(0), 10_000, 0.0)
    assert abs(np.corrcoef(e1, e2)[0, 1]) < 0.05
    e1, e2 = _shock_pair(np.random.default_rng(0), 10_000, 0.9)
    assert abs(np.corrcoef(e1, e2)[0, 1] - 0.9) < 0.02


def test_frozen_ar1_autocorrelation():
    x = tvar1(0.6, np.random.default_rng(1).normal(size=10_200), burn_in=200)
    r1 = np.corrcoef(x[:-1], x[1:])[0, 1]
    assert abs(r1 - 0.6) < 0.05


def test_tvar1_recursion_by_hand():
    shocks = np.array([1.0, 0.0, 2.0, -1.0])
    out = tvar1(0.5, shocks, burn_in=1)
    assert out.tolist() == [0.5, 2.25, 0.125]


@pytest.mark.parametrize("family", ["correlated-shocks", "additive-effect", "indep-trend"])
def test_generate_shapes_and_determinism(family):
    d = DgpSpec(family, 2, 0.5)
    a = generate(d, 150, make_rng(3))
    b = generate(d, 150, make_rng(3))
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a.series, b.series))
    assert a.n == 150
    assert a.dim_count("Z") == (0 if family == "indep-trend" else 1)
    om = oracle_means(d, a)
    assert set(om) == {("X", 0, 0), ("Y", 0, 0)} and om[("X", 0, 0)].shape == (150,)


def test_additive_oracle():
    d = DgpSpec("additive-effect", 1, 0.7)
    p = generate(d, 50, make_rng(1))
    om = oracle_means(d, p)
    np.testing.assert_allclose(om[("Y", 0, 0)], 1.7 * om[("X", 0, 0)])


def test_dgp_validation():
    with pytest.raises(DataError):
        DgpSpec("nope")
    with pytest.raises(DataError):
        DgpSpec(strength=1.5)
    with pytest.raises(DataError):
        DgpSpec(complexity=0)
    with pytest.raises(DataError):
        ReplicationPlan(replications=0)


def test_replication_seeds_are_coordinate_bound():
    d = DgpSpec()
    a = replication_seeds(1, d, 100, 3)
    assert a[1] == replication_seeds(1, d, 100, 3)[1]
    assert a[1] != replication_seeds(1, d, 100, 4)[1]
    assert a[1] != replication_seeds(1, DgpSpec(strength=0.5), 100, 3)[1]


def test_rates_deterministic_across_workers():
    cfg = TestConfig(sims=100)
    dgps = [DgpSpec("indep-trend", 1, 0.0), DgpSpec("indep-trend", 1, 0.9)]
    kw = dict(ns=(120,), replications=4, seed=9, config=cfg, oracle=True)
    a = rejection_rates(ReplicationPlan(**kw, workers=1), dgps)
    b = rejection_rates(ReplicationPlan(**kw, workers=2), dgps)
    assert a == b
    rows = rate_rows(a)
    assert len(rows) == 2 and {"rate", "se", "n", "strength"} <= set(rows[0])


def test_failed_replications_are_counted():
    plan = ReplicationPlan(ns=(60,), replications=2, config=TestConfig(sims=10), oracle=True, lag_window=60)
    cell = rejection_rates(plan, [DgpSpec()])[0]
    assert cell.failures == 2 and np.isnan(cell.rate) and "InsufficientData" in cell.errors[0]
