"""Filtering, smoothing and sampling tests.

The dense-GP oracle (direct Gram-matrix Cholesky on the closed-form
kernel) provides an independent route to the log likelihood and the
posterior moments; the recursions must agree with it to near machine
precision on problems small enough to afford the O(T^3) cost.
"""

import numpy as np
import pytest

from specmix import (
    DataError,
    MaternComponent,
    ObservationSequence,
    SpectralMixtureModel,
    dense_gp_loglik_oracle,
    dense_gp_posterior,
    discretize_model,
    extract_subbands,
    kalman_filter,
    rts_smoother,
    sample_posterior,
    sample_prior,
)


def _model(comps, noise=0.01, fs=1000.0):
    return SpectralMixtureModel(tuple(comps), noise, fs)


def _simulate(model, n, seed):
    dss = discretize_model(model)
    y = sample_prior(dss, n, seed=seed, obs_noise_variance=model.obs_noise_variance)
    return dss, np.asarray(y)[0]


CONFIGS = [
    ([(0.5, 1.0, 0.01, 0.0)], 0.1),
    ([(0.5, 1.0, 0.01, 2 * np.pi * 60)], 0.05),
    ([(1.5, 0.7, 0.02, 2 * np.pi * 120)], 0.02),
    ([(2.5, 1.3, 0.015, 2 * np.pi * 200)], 0.3),
    ([(0.5, 1.0, 0.01, 2 * np.pi * 40), (1.5, 0.5, 0.03, 2 * np.pi * 150)], 0.05),
    ([(2.5, 0.8, 0.01, 2 * np.pi * 90), (0.5, 0.3, 0.05, 0.0)], 0.15),
]


# ----------------------------------------------------------------------
# observation container
# ----------------------------------------------------------------------


def test_obs_rejects_nan_at_observed_step():
    y = np.array([1.0, np.nan, 2.0])
    with pytest.raises(DataError):
        ObservationSequence(y, np.array([False, False, False]), 0.1)
    # fine when the NaN is masked out
    ObservationSequence(y, np.array([False, True, False]), 0.1)


def test_obs_from_values_infers_mask():
    y = np.array([1.0, np.nan, 2.0, np.nan])
    obs = ObservationSequence.from_values(y, 0.1)
    np.testing.assert_array_equal(obs.missing_mask, [False, True, False, True])


def test_obs_rejects_negative_noise():
    with pytest.raises(ValueError):
        ObservationSequence(np.zeros(3), np.zeros(3, dtype=bool), -1.0)


# ----------------------------------------------------------------------
# filter against closed forms and the dense oracle
# ----------------------------------------------------------------------


def test_single_step_loglik_closed_form():
    """One observation y=0 under a unit model: N(0 | 0, 2), so
    loglik = -0.5 * log(4 pi)."""
    model = _model([MaternComponent(0.5, 1.0, 1.0, 0.0)], noise=1.0, fs=1.0)
    obs = ObservationSequence(np.array([0.0]), np.array([False]), 1.0)
    res = kalman_filter(discretize_model(model), obs)
    expected = -0.5 * np.log(4 * np.pi)
    assert res.log_marginal_likelihood == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(-1.2655121234846454)


@pytest.mark.parametrize("comps,noise", CONFIGS)
def test_filter_loglik_matches_dense_oracle(comps, noise):
    model = _model([MaternComponent(*c) for c in comps], noise)
    dss, y = _simulate(model, 120, seed=3)
    obs = ObservationSequence(y, np.zeros(y.size, dtype=bool), noise)
    got = kalman_filter(dss, obs).log_marginal_likelihood
    want = dense_gp_loglik_oracle(model, obs)
    assert got == pytest.approx(want, rel=1e-10)


def test_filter_loglik_matches_oracle_with_gaps():
    model = _model([MaternComponent(1.5, 1.0, 0.02, 2 * np.pi * 80)], 0.05)
    dss, y = _simulate(model, 150, seed=11)
    mask = np.zeros(150, dtype=bool)
    mask[40:55] = True
    mask[100:130] = True
    obs = ObservationSequence(y, mask, 0.05)
    got = kalman_filter(dss, obs)
    want = dense_gp_loglik_oracle(model, obs)
    assert got.log_marginal_likelihood == pytest.approx(want, rel=1e-10)
    # masked steps contribute exactly zero
    np.testing.assert_array_equal(got.step_loglik[mask], 0.0)


def test_cholesky_and_eigh_oracles_agree():
    model = _model([MaternComponent(2.5, 1.0, 0.01, 2 * np.pi * 100)], 0.02)
    _, y = _simulate(model, 80, seed=7)
    obs = ObservationSequence(y, np.zeros(80, dtype=bool), 0.02)
    a = dense_gp_loglik_oracle(model, obs, method="cholesky")
    b = dense_gp_loglik_oracle(model, obs, method="eigh")
    assert a == pytest.approx(b, rel=1e-9)


def test_fully_masked_filter_is_prior():
    model = _model([(MaternComponent(1.5, 1.0, 0.02, 2 * np.pi * 50))], 0.1)
    dss = discretize_model(model)
    y = np.full(30, np.nan)
    obs = ObservationSequence(y, np.ones(30, dtype=bool), 0.1)
    res = kalman_filter(dss, obs)
    assert res.log_marginal_likelihood == 0.0
    np.testing.assert_array_equal(res.means, np.zeros((30, dss.state_dim)))
    # stationary: filtered covariance stays at the prior
    np.testing.assert_allclose(res.covariances[-1], dss.Pinf, rtol=1e-10, atol=1e-12)


# ----------------------------------------------------------------------
# smoother against the dense posterior
# ----------------------------------------------------------------------


@pytest.mark.parametrize("comps,noise", CONFIGS[:4])
def test_smoother_matches_dense_posterior(comps, noise):
    model = _model([MaternComponent(*c) for c in comps], noise)
    dss, y = _simulate(model, 100, seed=5)
    mask = np.zeros(100, dtype=bool)
    mask[30:50] = True
    obs = ObservationSequence(np.where(mask, np.nan, y), mask, noise)
    post = rts_smoother(dss, kalman_filter(dss, obs))
    mean_want, var_want = dense_gp_posterior(model, obs)
    np.testing.assert_allclose(post.reconstruction_mean, mean_want, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(post.reconstruction_var, var_want, rtol=1e-8, atol=1e-12)


def test_smoother_slim_mode_matches_full():
    model = _model([MaternComponent(1.5, 1.0, 0.02, 2 * np.pi * 70)], 0.05)
    dss, y = _simulate(model, 90, seed=9)
    obs = ObservationSequence(y, np.zeros(90, dtype=bool), 0.05)
    filt = kalman_filter(dss, obs)
    full = rts_smoother(dss, filt, store_full_cov=True)
    slim = rts_smoother(dss, kalman_filter(dss, obs), store_full_cov=False)
    assert slim.covariances is None
    np.testing.assert_allclose(slim.reconstruction_mean, full.reconstruction_mean, rtol=1e-12)
    np.testing.assert_allclose(slim.reconstruction_var, full.reconstruction_var, rtol=1e-12)
    np.testing.assert_allclose(slim.state_variances, full.state_variances, rtol=1e-12)


def test_posterior_variance_shrinks_below_prior_at_observed_steps():
    model = _model([MaternComponent(1.5, 1.0, 0.02, 2 * np.pi * 70)], 0.05)
    dss, y = _simulate(model, 60, seed=2)
    obs = ObservationSequence(y, np.zeros(60, dtype=bool), 0.05)
    post = rts_smoother(dss, kalman_filter(dss, obs))
    prior_var = (dss.H[0] @ dss.Pinf @ dss.H[0]) + 0.05
    assert np.all(post.reconstruction_var < prior_var)
    assert np.all(post.reconstruction_var >= 0.05)  # never below the noise floor


# ----------------------------------------------------------------------
# subband extraction
# ----------------------------------------------------------------------


def test_subband_reconstruction_identity():
    """The reconstruction mean equals the sum of the real subband tracks."""
    comps = [
        MaternComponent(0.5, 1.0, 0.01, 2 * np.pi * 40),
        MaternComponent(1.5, 0.5, 0.03, 2 * np.pi * 150),
        MaternComponent(2.5, 0.3, 0.02, 2 * np.pi * 330),
    ]
    model = _model(comps, 0.05)
    dss, y = _simulate(model, 80, seed=13)
    obs = ObservationSequence(y, np.zeros(80, dtype=bool), 0.05)
    post = rts_smoother(dss, kalman_filter(dss, obs))
    sub = extract_subbands(dss, post)
    assert sub.real.shape == (3, 80)
    np.testing.assert_allclose(sub.real.sum(axis=0), post.reconstruction_mean, rtol=1e-12)
    np.testing.assert_allclose(sub.amplitude, np.hypot(sub.real, sub.imag), rtol=1e-14)
    np.testing.assert_allclose(sub.phase, np.arctan2(sub.imag, sub.real), rtol=1e-14)
    assert np.all(sub.real_variance >= 0)


# ----------------------------------------------------------------------
# sampling
# ----------------------------------------------------------------------


def test_prior_samples_deterministic_and_shaped():
    model = _model([MaternComponent(1.5, 1.0, 0.02, 2 * np.pi * 100)], 0.0)
    dss = discretize_model(model)
    a = sample_prior(dss, 50, seed=42, n_samples=3)
    b = sample_prior(dss, 50, seed=42, n_samples=3)
    assert np.asarray(a).shape == (3, 50)
    np.testing.assert_array_equal(a, b)
    c = sample_prior(dss, 50, seed=43, n_samples=3)
    assert not np.array_equal(a, c)


def test_prior_sample_moments():
    """Empirical marginal variance of many draws matches k(0) + noise."""
    model = _model([MaternComponent(0.5, 2.0, 0.005, 2 * np.pi * 150)], 0.1)
    dss = discretize_model(model)
    ys = np.asarray(sample_prior(dss, 400, seed=0, obs_noise_variance=0.1, n_samples=400))
    marginal = ys.var(axis=0).mean()
    assert marginal == pytest.approx(2.1, rel=0.05)


def test_posterior_samples_track_smoother():
    model = _model([MaternComponent(1.5, 1.0, 0.02, 2 * np.pi * 60)], 0.02)
    dss, y = _simulate(model, 70, seed=21)
    mask = np.zeros(70, dtype=bool)
    mask[25:40] = True
    obs = ObservationSequence(np.where(mask, np.nan, y), mask, 0.02)
    post = rts_smoother(dss, kalman_filter(dss, obs), store_full_cov=False)
    draws = np.asarray(sample_posterior(dss, obs, n_samples=400, seed=1))
    assert draws.shape == (400, 70)
    draw_mean = draws.mean(axis=0)
    # MC error ~ sqrt(var/400); allow 5 sigma
    tol = 5 * np.sqrt(post.reconstruction_var / 400)
    assert np.all(np.abs(draw_mean - post.reconstruction_mean) < tol)
    # spread in the gap must exceed spread where data is observed
    assert draws[:, 30].std() > draws[:, 10].std()


def test_posterior_sampling_deterministic():
    model = _model([MaternComponent(0.5, 1.0, 0.01, 2 * np.pi * 90)], 0.05)
    dss, y = _simulate(model, 40, seed=8)
    obs = ObservationSequence(y, np.zeros(40, dtype=bool), 0.05)
    a = sample_posterior(dss, obs, n_samples=2, seed=7)
    b = sample_posterior(dss, obs, n_samples=2, seed=7)
    np.testing.assert_array_equal(a, b)
