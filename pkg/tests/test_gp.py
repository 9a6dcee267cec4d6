import math

import numpy as np
import pytest
from scipy.optimize import approx_fprime

from tiered_bo.gp import (
    FitConfig,
    GpFitError,
    KernelParams,
    _factor,
    _neg_lml,
    _sq_dists,
    fit,
    kernel,
    kernel_matrix,
    log_marginal_likelihood,
    predict,
)


def dense_oracle(m, x):
    """Posterior mean/std by explicit matrix inverse, kernel entries one at a time."""
    X, p = m.train_inputs, m.params
    n = len(X)
    K = np.array([[kernel(a, b, p) for b in X] for a in X]) + (p.noise_variance + m.jitter) * np.eye(n)
    Kinv = np.linalg.inv(K)
    ks = np.array([kernel(x, b, p) for b in X])
    mu = ks @ Kinv @ m.train_targets
    var = kernel(x, x, p) - ks @ Kinv @ ks
    return m.target_mean + m.target_std * mu, m.target_std * math.sqrt(max(var, 0.0))


def test_kernel_examples():
    p = KernelParams(2.5, (0.7, 0.3))
    x = np.array([0.2, 0.9])
    assert kernel(x, x, p) == 2.5
    q = KernelParams(1.0, (1.0,))
    assert kernel([0.0], [math.sqrt(2)], q) == pytest.approx(math.exp(-1), abs=1e-12)
    rng = np.random.default_rng(0)
    a, b = rng.random(2), rng.random(2)
    assert kernel(a, b, p) == kernel(b, a, p)


def test_kernel_rejects_bad_params():
    with pytest.raises(ValueError):
        KernelParams(0.0, (1.0,))
    with pytest.raises(ValueError):
        KernelParams(1.0, (1.0, -0.5))
    with pytest.raises(ValueError):
        kernel([0.0, 1.0], [0.0], KernelParams(1.0, (1.0,)))


def test_kernel_matrix_matches_scalar_kernel():
    rng = np.random.default_rng(1)
    p = KernelParams(1.7, (0.3, 0.8, 2.0))
    A, B = rng.random((4, 3)), rng.random((5, 3))
    K = kernel_matrix(A, B, p)
    for i in range(4):
        for j in range(5):
            assert K[i, j] == pytest.approx(kernel(A[i], B[j], p), rel=1e-12)


def test_params_log_round_trip():
    p = KernelParams(3.0, (0.1, 2.0), 1e-5)
    q = KernelParams.from_log(p.to_log())
    assert q.signal_variance == pytest.approx(3.0)
    assert q.lengthscales == pytest.approx((0.1, 2.0))
    assert q.noise_variance == pytest.approx(1e-5)


def test_zero_targets_give_zero_mean():
    m = fit(np.array([[0.1], [0.9]]), np.array([0.0, 0.0]))
    mu, _ = m.predict(np.linspace(0, 1, 11)[:, None])
    assert np.max(np.abs(mu)) <= 1e-6


def test_fit_preconditions():
    with pytest.raises(ValueError):
        fit(np.array([[0.5]]), np.array([1.0]))
    with pytest.raises(ValueError):
        fit(np.array([[0.1], [0.5]]), np.array([1.0, np.nan]))


def test_linear_midpoint_matches_truth_and_oracle():
    X = np.array([[0.0], [0.2], [0.4], [0.8], [1.0]])
    y = 2.0 * X[:, 0] + 1.0
    m = fit(X, y)
    mu, _ = m.predict(np.array([0.6]))
    assert abs(mu - 2.2) <= 0.1 * np.std(y)
    # long lengthscale: K is badly conditioned and the explicit inverse loses digits
    assert mu == pytest.approx(dense_oracle(m, np.array([0.6]))[0], rel=1e-5)


def test_predict_matches_dense_oracle():
    rng = np.random.default_rng(2)
    X = rng.random((8, 3))
    y = rng.standard_normal(8)
    m = fit(X, y, FitConfig(seed=4))
    for x in rng.random((10, 3)):
        mu, sd = predict(m, x)
        mo, so = dense_oracle(m, x)
        assert mu == pytest.approx(mo, rel=1e-8)
        assert sd == pytest.approx(so, rel=1e-8)


def test_batch_and_single_predictions_agree():
    rng = np.random.default_rng(3)
    m = fit(rng.random((12, 2)), rng.standard_normal(12))
    Q = rng.random((6, 2))
    mu, sd = m.predict(Q)
    for i, q in enumerate(Q):
        a, b = m.predict(q)
        assert a == pytest.approx(mu[i], rel=1e-12)
        assert b == pytest.approx(sd[i], rel=1e-12)


def test_interpolates_training_points():
    rng = np.random.default_rng(5)
    X = rng.random((10, 2))
    y = np.sin(4 * X[:, 0]) + X[:, 1]
    m = fit(X, y, FitConfig(params=KernelParams(1.0, (0.3, 0.3), 1e-8)))
    mu, sd = m.predict(X)
    assert np.max(np.abs(mu - y)) <= 1e-4
    assert np.max(sd) <= 1e-3
    # fitted model: within 3 noise-plus-jitter std devs on the target scale
    f = fit(X, y)
    mu, _ = f.predict(X)
    tol = 3 * math.sqrt(f.params.noise_variance + f.jitter) * f.target_std
    assert np.max(np.abs(mu - y)) <= tol + 1e-9


def test_prior_reversion_far_away():
    X = np.array([[0.0], [0.05], [0.1]])
    y = np.array([1.0, 2.0, 0.5])
    p = KernelParams(1.3, (0.01,), 1e-6)
    m = fit(X, y, FitConfig(params=p))
    mu, sd = m.predict(np.array([0.9]))
    assert mu == pytest.approx(m.target_mean, abs=1e-3)
    assert sd == pytest.approx(math.sqrt(1.3) * m.target_std, abs=1e-3)
    # variance is smaller at the data than far away
    assert m.predict(np.array([0.05]))[1] <= sd


def test_out_of_cube_clamped_with_warning(caplog):
    m = fit(np.array([[0.1], [0.9]]), np.array([0.0, 1.0]))
    with caplog.at_level("WARNING"):
        a = m.predict(np.array([1.5]))
    assert "clamping" in caplog.text
    assert a == m.predict(np.array([1.0]))


def test_cholesky_reconstructs_covariance():
    rng = np.random.default_rng(6)
    X = rng.random((15, 2))
    m = fit(X, rng.standard_normal(15))
    K = kernel_matrix(X, X, m.params) + (m.params.noise_variance + m.jitter) * np.eye(15)
    L = m.cholesky_factor
    assert np.linalg.norm(L @ L.T - K) <= 1e-8 * np.linalg.norm(K)


def test_fitted_likelihood_beats_every_start():
    rng = np.random.default_rng(7)
    for k in range(5):
        X = rng.random((20, 2))
        y = np.cos(5 * X[:, 0]) * X[:, 1] + 0.01 * rng.standard_normal(20)
        m = fit(X, y, FitConfig(seed=k))
        assert len(m.start_likelihoods) == 5
        assert m.log_marginal_likelihood >= max(m.start_likelihoods) - 1e-9


def test_fit_is_deterministic():
    rng = np.random.default_rng(8)
    X, y = rng.random((10, 2)), rng.standard_normal(10)
    a, b = fit(X, y, FitConfig(seed=3)), fit(X, y, FitConfig(seed=3))
    assert a.params == b.params


def test_hyperparameters_inside_box():
    rng = np.random.default_rng(9)
    cfg = FitConfig()
    m = fit(rng.random((25, 3)), rng.standard_normal(25), cfg)
    lo, hi = cfg.lengthscale_bounds
    assert all(lo * (1 - 1e-9) <= v <= hi * (1 + 1e-9) for v in m.params.lengthscales)
    assert cfg.noise_bounds[0] * (1 - 1e-9) <= m.params.noise_variance <= cfg.noise_bounds[1] * (1 + 1e-9)


def test_constant_targets_skip_standardization():
    m = fit(np.array([[0.2], [0.4], [0.6]]), np.array([3.0, 3.0, 3.0]))
    assert m.target_std == 1.0
    assert m.predict(np.array([0.3]))[0] == pytest.approx(3.0, abs=1e-6)


def test_duplicate_points_need_jitter():
    K = np.ones((3, 3))
    L, jitter = _factor(K, 0.0)
    assert jitter >= 1e-10
    np.testing.assert_allclose(L @ L.T, K + jitter * np.eye(3), atol=1e-12)
    with pytest.raises(GpFitError):
        _factor(-np.eye(2), 0.0)


def test_likelihood_gradient_matches_finite_differences():
    rng = np.random.default_rng(10)
    X = rng.random((12, 2))
    y = rng.standard_normal(12)
    D = _sq_dists(X)
    theta = np.log([0.4, 0.7, 1.2, 1e-3])
    _, g = _neg_lml(theta, D, y)
    fd = approx_fprime(theta, lambda t: _neg_lml(t, D, y)[0], 1e-6)
    np.testing.assert_allclose(g, fd, rtol=1e-4, atol=1e-4)


def test_log_marginal_likelihood_matches_dense_formula():
    rng = np.random.default_rng(11)
    X, y = rng.random((9, 2)), rng.standard_normal(9)
    p = KernelParams(0.8, (0.3, 0.5), 1e-4)
    K = kernel_matrix(X, X, p) + p.noise_variance * np.eye(9)
    _, logdet = np.linalg.slogdet(K)
    ref = -0.5 * y @ np.linalg.solve(K, y) - 0.5 * logdet - 4.5 * math.log(2 * math.pi)
    assert log_marginal_likelihood(X, y, p) == pytest.approx(ref, rel=1e-10)
