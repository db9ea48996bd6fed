"""GP-sampled test functions and Latin hypercube designs."""

import math

import numpy as np
import pytest

from kgbo.optimizer import OptimizerConfig
from kgbo.testbed import latin_hypercube, sample_gp_function, true_optimum

from oracles import central_difference


def test_same_seed_reproduces_values():
    probes = np.random.default_rng(0).random((20, 2))
    a = sample_gp_function(2, seed=42)
    b = sample_gp_function(2, seed=42)
    np.testing.assert_array_equal(a(probes), b(probes))
    assert not np.array_equal(a(probes), sample_gp_function(2, seed=43)(probes))


def test_feature_floor_enforced():
    with pytest.raises(ValueError):
        sample_gp_function(2, n_features=128)


def test_gradient_matches_finite_differences():
    fn = sample_gp_function(3, seed=5)
    rng = np.random.default_rng(5)
    for _ in range(5):
        x = rng.random(3)
        np.testing.assert_allclose(fn.grad(x), central_difference(fn, x),
                                   rtol=1e-5, atol=1e-7)


def test_prior_moments_smoke():
    # reduced-size version of the acceptance moment checks
    x = np.array([0.37, 0.61])
    x2 = x + np.array([0.1, 0.0])  # one lengthscale away
    vals = np.empty((500, 2))
    for s in range(500):
        fn = sample_gp_function(2, lengthscale=0.1, variance=1.0, seed=s)
        vals[s] = fn(np.vstack([x, x2]))
    var = vals[:, 0].var()
    corr = np.corrcoef(vals[:, 0], vals[:, 1])[0, 1]
    assert var == pytest.approx(1.0, rel=0.15)
    assert corr == pytest.approx(math.exp(-0.5), abs=0.08)


def test_true_optimum_dominates_audit_set_and_is_cached():
    fn = sample_gp_function(2, seed=9)
    point, value = fn.true_max
    assert fn.true_max is fn.true_max  # cached tuple, not recomputed
    probes = np.random.default_rng(99).random((10_000, 2))
    assert value >= float(np.max(fn(probes))) - 1e-6
    assert value == pytest.approx(fn(point), abs=1e-12)


def test_true_optimum_matches_dense_grid_in_1d():
    fn = sample_gp_function(1, n_features=2048, seed=11)
    _, value = true_optimum(fn)
    grid = np.linspace(0.0, 1.0, 1_000_001)[:, None]
    grid_max = float(np.max(fn(grid)))
    assert value >= grid_max - 1e-5


def test_true_optimum_monotone_in_budget():
    fn = sample_gp_function(2, seed=12)
    _, v50 = true_optimum(fn, OptimizerConfig(restarts=50, max_iters=200))
    _, v100 = true_optimum(fn, OptimizerConfig(restarts=100, max_iters=200))
    assert v100 >= v50 - 1e-12


def test_latin_hypercube_single_point():
    design = latin_hypercube(1, 3, seed=0)
    assert design.points.shape == (1, 3)
    assert np.all((design.points >= 0) & (design.points <= 1))


def test_latin_hypercube_slab_property_1d():
    pts = np.sort(latin_hypercube(4, 1, seed=1).points[:, 0])
    for i, p in enumerate(pts):
        assert 0.25 * i <= p < 0.25 * (i + 1)


def test_latin_hypercube_projection_property():
    n, d = 20, 6
    pts = latin_hypercube(n, d, seed=2).points
    for j in range(d):
        bins = np.floor(pts[:, j] * n).astype(int)
        assert sorted(bins) == list(range(n))


def test_latin_hypercube_deterministic():
    a = latin_hypercube(8, 2, seed=3).points
    b = latin_hypercube(8, 2, seed=3).points
    np.testing.assert_array_equal(a, b)
