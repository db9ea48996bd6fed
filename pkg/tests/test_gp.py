"""Gaussian process core: kernels, posterior moments, look-ahead machinery."""

import math

import numpy as np
import pytest

from kgbo.gp import (
    Dataset,
    DegenerateAnchorError,
    KernelConfig,
    KernelKind,
    NonPSDError,
    fit_posterior,
    kernel_eval,
    kernel_grad,
    kernel_matrix,
    kernel_matrix_and_grad,
)

from oracles import central_difference


def rbf_cfg(ls, sv=1.0, noise=0.0, jitter=1e-10):
    return KernelConfig(lengthscales=np.asarray(ls, dtype=float),
                        signal_variance=sv, noise_variance=noise, jitter=jitter)


def matern_cfg(ls, sv=1.0, noise=0.0):
    return KernelConfig(lengthscales=np.asarray(ls, dtype=float),
                        signal_variance=sv, kind=KernelKind.MATERN52,
                        noise_variance=noise)


ONE_POINT_MEAN = 1.0 / 1.1                      # hand inverse of the 1x1 system
ONE_POINT_VAR = 1.0 - 1.0 / 1.1
ONE_POINT_SIGMA_TILDE = ONE_POINT_VAR / math.sqrt(ONE_POINT_VAR + 0.1)


# -- kernels -----------------------------------------------------------------


def test_rbf_identity_at_zero_distance():
    cfg = rbf_cfg([0.7, 0.3])
    x = np.array([0.2, 0.9])
    assert kernel_eval(cfg, x, x) == 1.0


def test_rbf_unit_distance_closed_form():
    cfg = rbf_cfg([1.0])
    assert kernel_eval(cfg, np.array([0.0]), np.array([1.0])) == pytest.approx(
        math.exp(-0.5), abs=1e-12)


def test_matern_identity_scales_with_signal_variance():
    cfg = matern_cfg([0.4], sv=2.5)
    x = np.array([0.6])
    assert kernel_eval(cfg, x, x) == 2.5


def test_kernel_symmetry_and_range():
    rng = np.random.default_rng(0)
    for cfg in (rbf_cfg([0.3, 0.8], sv=1.7), matern_cfg([0.5, 0.2], sv=0.9)):
        for _ in range(50):
            a, b = rng.random(2), rng.random(2)
            kab = kernel_eval(cfg, a, b)
            assert kab == kernel_eval(cfg, b, a)
            assert 0.0 < kab <= cfg.signal_variance


def test_kernel_dimension_mismatch_raises():
    cfg = rbf_cfg([0.5, 0.5])
    with pytest.raises(ValueError):
        kernel_eval(cfg, np.array([0.1]), np.array([0.2]))
    with pytest.raises(ValueError):
        kernel_matrix(cfg, np.zeros((3, 1)), np.zeros((3, 2)))


def test_kernel_grad_matches_finite_differences():
    rng = np.random.default_rng(1)
    for cfg in (rbf_cfg([0.3, 0.6], sv=1.2), matern_cfg([0.4, 0.8], sv=2.0)):
        a, b = rng.random(2), rng.random(2)
        g = kernel_grad(cfg, a[None, :], b[None, :])[0, 0]
        g_fd = central_difference(lambda x: kernel_eval(cfg, x, b), a)
        np.testing.assert_allclose(g, g_fd, rtol=1e-6, atol=1e-9)


def test_kernel_grad_smooth_at_coincident_points():
    for cfg in (rbf_cfg([0.3]), matern_cfg([0.3])):
        x = np.array([0.5])
        g = kernel_grad(cfg, x[None, :], x[None, :])[0, 0]
        np.testing.assert_allclose(g, 0.0, atol=1e-15)


def test_fused_kernel_matrix_and_grad_agrees():
    rng = np.random.default_rng(2)
    A, B = rng.random((4, 3)), rng.random((6, 3))
    for cfg in (rbf_cfg([0.3, 0.6, 0.9]), matern_cfg([0.4, 0.2, 0.7], sv=1.5)):
        K, G = kernel_matrix_and_grad(cfg, A, B)
        np.testing.assert_array_equal(K, kernel_matrix(cfg, A, B))
        np.testing.assert_array_equal(G, kernel_grad(cfg, A, B))


# -- validation ---------------------------------------------------------------


def test_kernel_config_validation():
    with pytest.raises(ValueError):
        rbf_cfg([0.0])
    with pytest.raises(ValueError):
        rbf_cfg([0.5], sv=0.0)
    with pytest.raises(ValueError):
        rbf_cfg([0.5], noise=-0.1)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.array([[1.2]]), np.array([0.0]))
    with pytest.raises(ValueError):
        Dataset(np.array([[0.5], [0.6]]), np.array([0.0]))


# -- posterior ----------------------------------------------------------------


def one_point_gp():
    cfg = rbf_cfg([1.0], noise=0.1)
    return fit_posterior(Dataset(np.array([[0.5]]), np.array([1.0])), cfg, mu0=0.0)


def test_one_point_posterior_hand_example():
    gp = one_point_gp()
    x = np.array([0.5])
    assert gp.mean(x) == pytest.approx(ONE_POINT_MEAN, abs=1e-9)
    assert gp.var(x) == pytest.approx(ONE_POINT_VAR, abs=1e-9)
    assert gp.cov(x, x) == pytest.approx(ONE_POINT_VAR, abs=1e-9)


def test_noise_free_interpolation():
    rng = np.random.default_rng(3)
    X = rng.random((7, 2))
    Y = rng.standard_normal(7)
    gp = fit_posterior(Dataset(X, Y), rbf_cfg([0.4, 0.4]))
    assert gp.jitter_used <= 1e-10
    np.testing.assert_allclose(gp.mean(X), Y, atol=1e-8)
    np.testing.assert_allclose(gp.var(X), 0.0, atol=1e-8)


def test_far_field_reverts_to_prior():
    cfg = rbf_cfg([0.01], sv=1.3, noise=0.05)
    gp = fit_posterior(Dataset(np.array([[0.0]]), np.array([2.0])), cfg, mu0=0.7)
    far = np.array([1.0])
    assert gp.mean(far) == pytest.approx(0.7, abs=1e-12)
    assert gp.var(far) == pytest.approx(1.3, abs=1e-12)
    far2 = np.array([0.98])
    assert gp.cov(far, far2) == pytest.approx(
        kernel_eval(cfg, far, far2), abs=1e-12)


def test_fit_deterministic():
    rng = np.random.default_rng(4)
    X, Y = rng.random((6, 2)), rng.standard_normal(6)
    cfg = rbf_cfg([0.3, 0.5], noise=0.01)
    a = fit_posterior(Dataset(X, Y), cfg)
    b = fit_posterior(Dataset(X, Y), cfg)
    np.testing.assert_array_equal(a.weights, b.weights)
    np.testing.assert_array_equal(a.chol, b.chol)


def test_default_prior_mean_is_output_mean():
    rng = np.random.default_rng(5)
    X, Y = rng.random((5, 1)), rng.standard_normal(5) + 3.0
    gp = fit_posterior(Dataset(X, Y), rbf_cfg([0.2], noise=0.1))
    assert gp.mu0 == pytest.approx(np.mean(Y))


def test_jitter_escalation_on_duplicate_points():
    X = np.array([[0.5], [0.5]])
    Y = np.array([1.0, 1.0])
    gp = fit_posterior(Dataset(X, Y), rbf_cfg([0.3], jitter=0.0))
    assert gp.jitter_used > 0.0


def test_non_psd_error_carries_attempted_jitters(monkeypatch):
    import kgbo.gp as gp_mod

    def always_fail(*args, **kwargs):
        raise np.linalg.LinAlgError("forced")

    monkeypatch.setattr(gp_mod, "cholesky", always_fail)
    with pytest.raises(NonPSDError) as exc:
        fit_posterior(Dataset(np.array([[0.5]]), np.array([1.0])), rbf_cfg([0.3]))
    assert exc.value.attempted_jitters == (1e-10, 1e-8, 1e-6)


def test_variance_nonnegative_and_bounded_by_prior():
    rng = np.random.default_rng(6)
    X, Y = rng.random((12, 2)), rng.standard_normal(12)
    gp = fit_posterior(Dataset(X, Y), rbf_cfg([0.2, 0.2]))
    probes = rng.random((200, 2))
    v = gp.var(probes)
    assert np.all(v >= 0.0)
    assert np.all(gp.var(X) <= gp.kernel.signal_variance + 1e-12)


# -- sigma tilde and fantasies --------------------------------------------------


def test_sigma_tilde_one_point_hand_example():
    gp = one_point_gp()
    x = np.array([0.5])
    assert gp.sigma_tilde(x, x) == pytest.approx(ONE_POINT_SIGMA_TILDE, abs=1e-6)


def test_sigma_tilde_far_anchor_limits():
    # Anchor far from the data: behaves like the no-data prior, where the
    # scaling at the anchor itself is the prior standard deviation.
    cfg = rbf_cfg([0.005], sv=1.7)
    gp = fit_posterior(Dataset(np.array([[0.0]]), np.array([1.0])), cfg, mu0=0.0)
    far = np.array([1.0])
    assert gp.sigma_tilde(far, far) == pytest.approx(math.sqrt(1.7), abs=1e-6)
    near_data = np.array([0.0])
    assert gp.sigma_tilde(near_data, far) == pytest.approx(0.0, abs=1e-12)


def test_sigma_tilde_sign_matches_posterior_covariance():
    rng = np.random.default_rng(7)
    X, Y = rng.random((8, 2)), rng.standard_normal(8)
    gp = fit_posterior(Dataset(X, Y), rbf_cfg([0.3, 0.3], noise=0.05))
    anchor = rng.random(2)
    probes = rng.random((50, 2))
    sig = gp.lookahead(anchor).sigma(probes)
    cov = np.array([gp.cov(p, anchor) for p in probes])
    assert np.all(np.sign(sig) == np.sign(cov))


def test_degenerate_anchor_raises_when_noise_free():
    rng = np.random.default_rng(8)
    X, Y = rng.random((5, 1)), rng.standard_normal(5)
    gp = fit_posterior(Dataset(X, Y), rbf_cfg([0.3]))
    with pytest.raises(DegenerateAnchorError):
        gp.lookahead(X[2])
    # with observation noise the same anchor is fine
    gp_noisy = fit_posterior(Dataset(X, Y), rbf_cfg([0.3], noise=0.01))
    assert np.isfinite(gp_noisy.sigma_tilde(X[0], X[2]))


def test_fantasy_at_zero_z_is_posterior_mean():
    rng = np.random.default_rng(9)
    X, Y = rng.random((6, 2)), rng.standard_normal(6)
    gp = fit_posterior(Dataset(X, Y), rbf_cfg([0.4, 0.4], noise=0.02))
    fs = gp.fantasy(rng.random(2), 0.0)
    probes = rng.random((30, 2))
    np.testing.assert_array_equal(fs.value(probes), gp.mean(probes))


def test_fantasy_with_zero_scaling_ignores_z():
    cfg = rbf_cfg([0.005], noise=0.01)
    gp = fit_posterior(Dataset(np.array([[0.0]]), np.array([1.0])), cfg)
    fs = gp.fantasy(np.array([1.0]), 3.7)  # anchor decorrelated from probe
    probe = np.array([0.0])
    assert fs.value(probe) == gp.mean(probe)


@pytest.mark.parametrize("noise", [0.0, 1e-3, 0.1])
def test_reparameterization_identity_against_refit(noise):
    rng = np.random.default_rng(10 + int(noise * 1000))
    D, n = 2, 9
    X, Y = rng.random((n, D)), rng.standard_normal(n)
    cfg = rbf_cfg([0.3, 0.5], sv=1.4, noise=noise)
    gp = fit_posterior(Dataset(X, Y), cfg)
    anchor = rng.random(D)
    z = rng.standard_normal()
    s = math.sqrt(gp.var(anchor) + noise + gp.jitter_used)
    y_new = gp.mean(anchor) + s * z
    refit = fit_posterior(
        Dataset(np.vstack([X, anchor]), np.append(Y, y_new)), cfg, mu0=gp.mu0)
    probes = rng.random((100, D))
    fs = gp.fantasy(anchor, z)
    np.testing.assert_allclose(fs.value(probes), refit.mean(probes), atol=1e-8)


# -- gradients -------------------------------------------------------------------


def _grad_close(analytic, numeric):
    analytic = np.atleast_1d(analytic)
    numeric = np.atleast_1d(numeric)
    for a, g in zip(analytic, numeric):
        if abs(a) > 1e-6:
            assert abs(a - g) / abs(a) <= 1e-4
        else:
            assert abs(a - g) <= 1e-6


@pytest.mark.parametrize("kind", [KernelKind.SQUARED_EXPONENTIAL, KernelKind.MATERN52])
def test_posterior_gradients_match_central_differences(kind):
    rng = np.random.default_rng(11)
    X, Y = rng.random((10, 2)), rng.standard_normal(10)
    cfg = KernelConfig(lengthscales=np.array([0.3, 0.6]), signal_variance=1.1,
                       kind=kind, noise_variance=0.05)
    gp = fit_posterior(Dataset(X, Y), cfg)
    for _ in range(5):
        x = rng.random(2)
        anchor = rng.random(2)
        la = gp.lookahead(anchor)
        _grad_close(gp.mean_grad(x), central_difference(gp.mean, x))
        _grad_close(gp.var_grad(x), central_difference(gp.var, x))
        _grad_close(la.sigma_grad_x(x),
                    central_difference(lambda p: gp.sigma_tilde(p, anchor), x))
        _grad_close(la.sigma_grad_anchor(x),
                    central_difference(lambda q: gp.sigma_tilde(x, q), anchor))


def test_fantasy_grad_matches_central_differences():
    rng = np.random.default_rng(12)
    X, Y = rng.random((8, 2)), rng.standard_normal(8)
    gp = fit_posterior(Dataset(X, Y), rbf_cfg([0.4, 0.3], noise=0.02))
    fs = gp.fantasy(rng.random(2), -1.3)
    x = rng.random(2)
    _grad_close(fs.grad(x), central_difference(fs.value, x))


def test_fantasy_parts_consistent_with_individual_methods():
    rng = np.random.default_rng(13)
    X, Y = rng.random((7, 2)), rng.standard_normal(7)
    gp = fit_posterior(Dataset(X, Y), rbf_cfg([0.25, 0.5], noise=0.01))
    la = gp.lookahead(rng.random(2))
    pts = rng.random((9, 2))
    mean, mean_grad, sig, sig_grad = la.fantasy_parts(pts)
    np.testing.assert_allclose(mean, gp.mean(pts), atol=1e-14)
    np.testing.assert_allclose(mean_grad, gp.mean_grad(pts), atol=1e-14)
    np.testing.assert_allclose(sig, la.sigma(pts), atol=1e-14)
    np.testing.assert_allclose(sig_grad, la.sigma_grad_x(pts), atol=1e-14)
