"""Spectral-domain likelihood and fitting tests.

The analytic gradient is checked against central finite differences of the
likelihood itself, and the noise-only likelihood has a closed-form maximum
that the optimizer must find without iterating.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from specmix import (
    FitConfig,
    MaternComponent,
    SpectralMixtureModel,
    compute_periodogram,
    fit,
    init_model,
    smooth_spectrum,
    whittle_gradient,
    whittle_loglik,
)


def _noise_model(s, fs=100.0):
    return SpectralMixtureModel((), s, fs)


# ----------------------------------------------------------------------
# periodogram
# ----------------------------------------------------------------------


@given(
    y=arrays(
        np.float64,
        st.integers(min_value=2, max_value=257),
        elements=st.floats(-1e3, 1e3, allow_nan=False),
    )
)
@settings(max_examples=60, deadline=None)
def test_periodogram_parseval(y):
    """Total periodogram power equals T times the signal energy."""
    p = compute_periodogram(y, dt=0.01)
    np.testing.assert_allclose(p.power.sum(), y.size * np.sum(y**2), rtol=1e-9, atol=1e-6)


def test_periodogram_grid():
    y = np.zeros(8)
    y[0] = 1.0
    p = compute_periodogram(y, dt=0.5)
    np.testing.assert_allclose(p.freqs, 2 * np.pi * np.fft.fftfreq(8, d=0.5))
    np.testing.assert_allclose(p.power, np.ones(8))
    assert p.n_samples == 8
    assert p.dt == 0.5


def test_periodogram_rejects_bad_dt():
    with pytest.raises(ValueError):
        compute_periodogram(np.ones(8), dt=0.0)


# ----------------------------------------------------------------------
# likelihood closed forms
# ----------------------------------------------------------------------


def test_loglik_hand_computed_impulse():
    """Impulse of height 1, T=4: every periodogram bin is 1. Under a
    noise-only model gamma = 4 s, so the likelihood is
    -0.5 * sum(log(4s) + 1/(4s)) over 4 bins."""
    y = np.array([1.0, 0.0, 0.0, 0.0])
    p = compute_periodogram(y, dt=1.0)
    np.testing.assert_array_equal(p.power, np.ones(4))
    for s in (0.1, 0.25, 1.0):
        want = -2.0 * (np.log(4 * s) + 1.0 / (4 * s))
        assert whittle_loglik(_noise_model(s, fs=1.0), p) == pytest.approx(want, rel=1e-12)


def test_noise_only_mle_closed_form():
    """The noise-only likelihood peaks at s = sum(P) / T^2."""
    rng = np.random.default_rng(0)
    y = 0.7 * rng.standard_normal(512)
    p = compute_periodogram(y, dt=0.01)
    s_hat = p.power.sum() / p.n_samples**2
    # stationarity of the analytic gradient at the closed-form optimum
    g = whittle_gradient(_noise_model(s_hat), p)
    assert abs(g.d_log_noise_variance) < 1e-9
    # and it is a maximum
    base = whittle_loglik(_noise_model(s_hat), p)
    assert whittle_loglik(_noise_model(s_hat * 1.2), p) < base
    assert whittle_loglik(_noise_model(s_hat * 0.8), p) < base
    # s_hat is close to the true variance for white noise
    assert s_hat == pytest.approx(0.49, rel=0.2)


# ----------------------------------------------------------------------
# analytic gradient vs central differences
# ----------------------------------------------------------------------


def _fd_loglik(make_model, p, h=1e-6):
    return (whittle_loglik(make_model(h), p) - whittle_loglik(make_model(-h), p)) / (2 * h)


@pytest.mark.parametrize("seed", range(4))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    fs = 1000.0
    orders = rng.choice([0.5, 1.5, 2.5], size=2)
    comps = tuple(
        MaternComponent(
            float(orders[d]),
            float(rng.uniform(0.2, 2.0)),
            float(rng.uniform(0.005, 0.05)),
            float(rng.uniform(0.05, 0.9) * np.pi * fs),
        )
        for d in range(2)
    )
    model = SpectralMixtureModel(comps, float(rng.uniform(0.01, 0.5)), fs)
    y = rng.standard_normal(256)
    p = compute_periodogram(y, dt=1 / fs)

    g = whittle_gradient(model, p)

    def replace(d, **kw):
        new = list(model.components)
        new[d] = MaternComponent(
            kw.get("order", new[d].order),
            kw.get("variance", new[d].variance),
            kw.get("lengthscale", new[d].lengthscale),
            kw.get("center_freq", new[d].center_freq),
        )
        return SpectralMixtureModel(tuple(new), model.obs_noise_variance, fs)

    for d in range(2):
        c = model.components[d]
        fd = _fd_loglik(lambda h: replace(d, variance=c.variance * np.exp(h)), p)
        assert g.d_log_variance[d] == pytest.approx(fd, rel=1e-6, abs=1e-9)
        fd = _fd_loglik(lambda h: replace(d, lengthscale=c.lengthscale * np.exp(h)), p)
        assert g.d_log_lengthscale[d] == pytest.approx(fd, rel=1e-6, abs=1e-9)
        fd = _fd_loglik(lambda h: replace(d, center_freq=c.center_freq + h), p, h=1e-4)
        assert g.d_center_freq[d] == pytest.approx(fd, rel=1e-5, abs=1e-8)

    fd = _fd_loglik(
        lambda h: SpectralMixtureModel(comps, model.obs_noise_variance * np.exp(h), fs), p
    )
    assert g.d_log_noise_variance == pytest.approx(fd, rel=1e-6, abs=1e-9)


# ----------------------------------------------------------------------
# smoothing
# ----------------------------------------------------------------------


@given(
    y=arrays(
        np.float64,
        st.integers(min_value=16, max_value=128),
        elements=st.floats(-100, 100, allow_nan=False),
    ),
    hw=st.integers(min_value=0, max_value=7),
)
@settings(max_examples=40, deadline=None)
def test_smoothing_preserves_total_power(y, hw):
    p = compute_periodogram(y, dt=0.125)
    sm = smooth_spectrum(p, halfwidth=hw)
    np.testing.assert_allclose(sm.power.sum(), p.power.sum(), rtol=1e-10, atol=1e-8)


def test_smoothing_zero_halfwidth_is_identity():
    p = compute_periodogram(np.sin(np.arange(32)), dt=0.1)
    np.testing.assert_array_equal(smooth_spectrum(p, 0).power, p.power)


def test_smoothing_constant_invariant():
    p = compute_periodogram(np.zeros(64), dt=0.1)
    flat = type(p)(p.freqs, np.full(64, 3.0), p.n_samples, p.dt)
    np.testing.assert_allclose(smooth_spectrum(flat, 5).power, 3.0, rtol=1e-13)


def test_smoothing_window_wider_than_grid_rejected():
    p = compute_periodogram(np.ones(16), dt=0.1)
    with pytest.raises(ValueError):
        smooth_spectrum(p, halfwidth=9)


# ----------------------------------------------------------------------
# fitting
# ----------------------------------------------------------------------


def test_fit_rejects_noise_only_model():
    p = compute_periodogram(np.ones(64), dt=0.01)
    with pytest.raises(ValueError):
        fit(_noise_model(0.5), p)


def test_fit_with_everything_frozen_stops_immediately():
    """With all train flags off the projected gradient is zero, so the
    entry check reports convergence without taking a step."""
    rng = np.random.default_rng(3)
    y = rng.standard_normal(256)
    p = compute_periodogram(y, dt=0.01)
    start = SpectralMixtureModel(
        (MaternComponent(1.5, 1.0, 0.01, 2 * np.pi * 120),), 0.2, 100.0
    )
    cfg = FitConfig(
        train_variances=False,
        train_lengthscales=False,
        train_center_freqs=False,
        train_noise=False,
    )
    res = fit(start, p, cfg)
    assert res.converged
    assert res.n_iters == 0
    assert res.model == start


def test_fit_objective_monotone_and_improves():
    rng = np.random.default_rng(10)
    fs, T = 2000.0, 2048
    t = np.arange(T) / fs
    y = np.sin(2 * np.pi * 330 * t) + 0.1 * rng.standard_normal(T)
    p = compute_periodogram(y, dt=1 / fs)
    start = init_model(2, fs, order=0.5, signal=y, lengthscale_init=0.005)
    res = fit(start, p, FitConfig(max_iters=60))
    trace = np.asarray(res.objective_trace)
    assert trace.size >= 2
    assert np.all(np.diff(trace) >= -1e-9)
    assert trace[-1] > trace[0]


def test_fit_recovers_single_component_peak():
    """A fitted one-component model should put its center near the tone."""
    rng = np.random.default_rng(11)
    fs, T = 2000.0, 4096
    t = np.arange(T) / fs
    y = np.sin(2 * np.pi * 250 * t) + 0.05 * rng.standard_normal(T)
    p = compute_periodogram(y, dt=1 / fs)
    start = SpectralMixtureModel(
        (MaternComponent(0.5, 0.5, 0.01, 2 * np.pi * 180),), 0.01, fs
    )
    res = fit(start, p, FitConfig(smoothing_halfwidth=8, max_iters=800))
    f_hat = res.model.components[0].center_freq / (2 * np.pi)
    assert f_hat == pytest.approx(250.0, abs=5.0)


def test_fit_respects_train_flags():
    rng = np.random.default_rng(4)
    y = rng.standard_normal(512)
    p = compute_periodogram(y, dt=0.001)
    start = SpectralMixtureModel(
        (MaternComponent(1.5, 1.0, 0.01, 2 * np.pi * 100),), 0.05, 1000.0
    )
    cfg = FitConfig(max_iters=25, train_center_freqs=False, train_noise=False)
    res = fit(start, p, cfg)
    assert res.model.components[0].center_freq == start.components[0].center_freq
    assert res.model.obs_noise_variance == start.obs_noise_variance


def test_fit_keeps_centers_inside_the_band():
    rng = np.random.default_rng(6)
    fs = 1000.0
    y = rng.standard_normal(1024)
    p = compute_periodogram(y, dt=1 / fs)
    start = SpectralMixtureModel(
        (MaternComponent(0.5, 1.0, 0.01, np.pi * fs * 0.99),), 0.05, fs
    )
    res = fit(start, p, FitConfig(max_iters=40))
    for comp in res.model.components:
        assert 0.0 <= comp.center_freq <= np.pi * fs * (1 + 1e-12)


# ----------------------------------------------------------------------
# initialization helper
# ----------------------------------------------------------------------


def test_init_model_layout():
    m = init_model(4, 8000.0, order=1.5, nyquist_fraction=0.8)
    assert m.n_components == 4
    freqs = [c.center_freq for c in m.components]
    assert freqs == sorted(freqs)
    assert freqs[-1] <= 0.8 * np.pi * 8000.0 * (1 + 1e-12)
    assert all(c.order == 1.5 for c in m.components)


def test_init_model_from_signal_energy():
    rng = np.random.default_rng(1)
    y = 3.0 * rng.standard_normal(4000)
    m = init_model(5, 8000.0, signal=y)
    total = sum(c.variance for c in m.components)
    assert total == pytest.approx(np.var(y), rel=0.05)
    assert m.obs_noise_variance == pytest.approx(0.01 * np.var(y), rel=0.05)
