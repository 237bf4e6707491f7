"""Exact filtering, smoothing and sampling for discretized mixture models.

The forward pass is a standard Kalman filter over the block-diagonal
transition; missing samples are handled by skipping the measurement update,
which leaves the log-likelihood contribution of those steps at exactly zero.
The backward pass is a Rauch-Tung-Striebel smoother. A dense Gaussian-process
oracle over the same kernel is included for cross-checking on short records.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DataError, NumericalError
from .kernels import SpectralMixtureModel, eval_mixture_kernel
from .statespace import BlockDiagMatrix, DiscreteStateSpace

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class ObservationSequence:
    """Uniformly sampled scalar observations with an optional missing mask.

    ``missing_mask[k]`` True means y_k was not observed; its value is ignored
    (NaN is allowed there, and only there).
    """

    values: np.ndarray
    missing_mask: np.ndarray
    obs_noise_variance: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.missing_mask is None:
            self.missing_mask = np.zeros(self.values.shape, dtype=bool)
        self.missing_mask = np.asarray(self.missing_mask, dtype=bool).ravel()
        if self.missing_mask.shape != self.values.shape:
            raise ValueError(
                f"mask length {self.missing_mask.size} != values length {self.values.size}"
            )
        if self.values.size == 0:
            raise ValueError("observation sequence must be non-empty")
        if not np.isfinite(self.obs_noise_variance) or self.obs_noise_variance < 0:
            raise ValueError(
                f"obs_noise_variance must be finite and >= 0, got {self.obs_noise_variance}"
            )
        bad = ~np.isfinite(self.values) & ~self.missing_mask
        if np.any(bad):
            raise DataError(
                f"non-finite observation at unmasked step {int(np.flatnonzero(bad)[0])}"
            )

    @classmethod
    def from_values(cls, values, obs_noise_variance: float, missing_mask=None):
        """Build a sequence, treating NaN entries as missing when no mask is given."""
        values = np.asarray(values, dtype=float)
        if missing_mask is None:
            missing_mask = ~np.isfinite(values)
        return cls(values, missing_mask, obs_noise_variance)

    @property
    def n_steps(self) -> int:
        return self.values.size


@dataclass
class FilterResult:
    """Forward-pass output; covariances is None when storage was disabled."""

    means: np.ndarray
    covariances: np.ndarray | None
    step_loglik: np.ndarray
    log_marginal_likelihood: float
    obs_noise_variance: float
    missing_mask: np.ndarray


@dataclass
class PosteriorSummary:
    """Smoothed posterior; reconstruction_* are the H-projected signal moments.

    ``reconstruction_var`` includes the observation noise floor, so it is the
    predictive variance for a new sample at that step. ``state_variances``
    keeps the per-coordinate marginals even when full covariance storage is
    turned off.
    """

    means: np.ndarray
    covariances: np.ndarray | None
    state_variances: np.ndarray
    log_marginal_likelihood: float
    reconstruction_mean: np.ndarray
    reconstruction_var: np.ndarray
    n_regularized: int = 0


@dataclass
class Subbands:
    """Per-channel posterior subband signals, one row per component."""

    real: np.ndarray
    imag: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray
    real_variance: np.ndarray


def kalman_filter(
    dss: DiscreteStateSpace, obs: ObservationSequence, store_covariances: bool = True
) -> FilterResult:
    """Run the forward filter from the stationary prior N(0, Pinf).

    Parameters
    ----------
    dss : DiscreteStateSpace
    obs : ObservationSequence
    store_covariances : bool
        Keep the per-step filtered covariance (T x M x M); required by the
        smoother and by posterior sampling, but heavy for long records.

    Returns
    -------
    FilterResult
    """
    T = obs.n_steps
    M = dss.state_dim
    h = dss.H[0]
    s2y = obs.obs_noise_variance
    A = BlockDiagMatrix(dss.A, dss.channel_offsets)

    means = np.empty((T, M))
    covs = np.empty((T, M, M)) if store_covariances else None
    step_ll = np.zeros(T)

    m = np.zeros(M)
    P = dss.Pinf.copy()
    total = 0.0
    for k in range(T):
        if k > 0:
            m = A.matmul(m)
            P = A.matmul(A.matmul(P).T).T + dss.Q
            P = 0.5 * (P + P.T)
        if not obs.missing_mask[k]:
            u = P @ h
            S = float(h @ u) + s2y
            if S <= 0 or not np.isfinite(S):
                raise NumericalError(f"innovation variance {S} at step {k}")
            v = obs.values[k] - float(h @ m)
            K = u / S
            m = m + K * v
            # Joseph form, expanded into rank-1 updates.
            P = P - np.outer(K, u)
            P = P - np.outer(P @ h, K) + s2y * np.outer(K, K)
            P = 0.5 * (P + P.T)
            ll = -0.5 * (LOG_2PI + np.log(S) + v * v / S)
            step_ll[k] = ll
            total += ll
        means[k] = m
        if store_covariances:
            covs[k] = P
    return FilterResult(means, covs, step_ll, float(total), s2y, obs.missing_mask.copy())


def _solve_spd(mat: np.ndarray, rhs: np.ndarray, context: str):
    """Cholesky solve with up to three doublings of a trace-scaled jitter."""
    jitter = 1e-10 * np.trace(mat) / mat.shape[0]
    attempts = 0
    work = mat
    while True:
        try:
            c = scipy.linalg.cho_factor(work, lower=True, check_finite=False)
            return scipy.linalg.cho_solve(c, rhs, check_finite=False), attempts
        except scipy.linalg.LinAlgError:
            if attempts >= 3:
                raise NumericalError(f"covariance not positive definite in {context}")
            work = work + jitter * np.eye(mat.shape[0])
            jitter *= 2.0
            attempts += 1


def rts_smoother(
    dss: DiscreteStateSpace, filtered: FilterResult, store_full_cov: bool = True
) -> PosteriorSummary:
    """Backward smoothing pass over a stored forward pass.

    Predicted moments are recomputed from the filtered ones on the fly, which
    keeps peak memory at one stored covariance array. With
    ``store_full_cov=False`` the full smoothed covariances are not retained;
    per-coordinate variances and the projected signal moments still are.
    """
    if filtered.covariances is None:
        raise ValueError("smoothing requires a filter run with store_covariances=True")
    means_f = filtered.means
    covs_f = filtered.covariances
    T, M = means_f.shape
    h = dss.H[0]
    A = BlockDiagMatrix(dss.A, dss.channel_offsets)

    means_s = np.empty((T, M))
    covs_s = np.empty((T, M, M)) if store_full_cov else None
    state_var = np.empty((T, M))
    n_reg = 0

    proj = np.empty(T)
    m_next = means_f[-1]
    P_next = covs_f[-1]
    means_s[-1] = m_next
    if store_full_cov:
        covs_s[-1] = P_next
    state_var[-1] = np.diag(P_next)
    proj[-1] = float(h @ P_next @ h)
    for k in range(T - 2, -1, -1):
        m_f = means_f[k]
        P_f = covs_f[k]
        m_pred = A.matmul(m_f)
        P_pred = A.matmul(A.matmul(P_f).T).T + dss.Q
        P_pred = 0.5 * (P_pred + P_pred.T)
        Z, attempts = _solve_spd(P_pred, A.matmul(P_f), f"smoother step {k}")
        n_reg += attempts
        G = Z.T
        m_next = m_f + G @ (m_next - m_pred)
        P_next = P_f + G @ (P_next - P_pred) @ G.T
        P_next = 0.5 * (P_next + P_next.T)
        means_s[k] = m_next
        if store_full_cov:
            covs_s[k] = P_next
        state_var[k] = np.diag(P_next)
        proj[k] = float(h @ P_next @ h)
    recon_mean = means_s @ h
    recon_var = np.maximum(proj, 0.0) + filtered.obs_noise_variance
    if n_reg:
        warnings.warn(f"smoother regularized {n_reg} solve(s)", RuntimeWarning)
    return PosteriorSummary(
        means_s,
        covs_s,
        state_var,
        filtered.log_marginal_likelihood,
        recon_mean,
        recon_var,
        n_regularized=n_reg,
    )


def extract_subbands(dss: DiscreteStateSpace, posterior: PosteriorSummary) -> Subbands:
    """Split a smoothed posterior into per-channel analytic subband signals.

    Each frequency-shifted channel carries an in-phase and a quadrature copy
    of its baseband state; their first coordinates give the subband's real and
    imaginary parts. Rows are channels, columns time steps.
    """
    T = posterior.means.shape[0]
    D = len(dss.channel_offsets)
    real = np.empty((D, T))
    imag = np.empty((D, T))
    real_var = np.empty((D, T))
    for d, (start, size) in enumerate(dss.channel_offsets):
        if size % 2:
            raise ValueError("subband extraction requires frequency-shifted channels")
        half = size // 2
        real[d] = posterior.means[:, start]
        imag[d] = posterior.means[:, start + half]
        real_var[d] = posterior.state_variances[:, start]
    amplitude = np.hypot(real, imag)
    phase = np.arctan2(imag, real)
    return Subbands(real, imag, amplitude, phase, real_var)


def _observed_times_and_values(model: SpectralMixtureModel, obs: ObservationSequence):
    t = np.arange(obs.n_steps) * model.dt
    keep = ~obs.missing_mask
    return t, t[keep], obs.values[keep]


def dense_gp_loglik_oracle(
    model: SpectralMixtureModel, obs: ObservationSequence, method: str = "cholesky"
) -> float:
    """Log marginal likelihood via an explicit T x T Gram matrix.

    Quadratic in memory and cubic in time; refuses records longer than 2000
    steps. ``method`` selects the factorization ("cholesky" or "eigh") so the
    two can be cross-checked against each other.
    """
    if obs.n_steps > 2000:
        raise ValueError(f"dense oracle limited to 2000 steps, got {obs.n_steps}")
    _, t_obs, y = _observed_times_and_values(model, obs)
    n = t_obs.size
    if n == 0:
        return 0.0
    K = eval_mixture_kernel(model, t_obs[:, None] - t_obs[None, :])
    K[np.diag_indices(n)] += obs.obs_noise_variance
    if method == "cholesky":
        try:
            c = scipy.linalg.cho_factor(K, lower=True)
        except scipy.linalg.LinAlgError as e:
            raise NumericalError(f"dense Gram matrix not positive definite: {e}") from e
        alpha = scipy.linalg.cho_solve(c, y)
        logdet = 2.0 * float(np.sum(np.log(np.diag(c[0]))))
    elif method == "eigh":
        w, V = np.linalg.eigh(K)
        if w.min() <= 0:
            raise NumericalError(f"dense Gram matrix has eigenvalue {w.min()}")
        z = V.T @ y
        alpha = V @ (z / w)
        logdet = float(np.sum(np.log(w)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return -0.5 * (float(y @ alpha) + logdet + n * LOG_2PI)


def dense_gp_posterior(model: SpectralMixtureModel, obs: ObservationSequence):
    """Posterior mean and predictive variance of the signal at every step.

    Same dense construction as the log-likelihood oracle; returns
    (mean, var) arrays of length T with var including the noise floor.
    """
    if obs.n_steps > 2000:
        raise ValueError(f"dense oracle limited to 2000 steps, got {obs.n_steps}")
    t_all, t_obs, y = _observed_times_and_values(model, obs)
    n = t_obs.size
    if n == 0:
        var0 = float(eval_mixture_kernel(model, np.zeros(1))[0])
        return np.zeros(t_all.size), np.full(t_all.size, var0 + obs.obs_noise_variance)
    K = eval_mixture_kernel(model, t_obs[:, None] - t_obs[None, :])
    K[np.diag_indices(n)] += obs.obs_noise_variance
    Ks = eval_mixture_kernel(model, t_all[:, None] - t_obs[None, :])
    c = scipy.linalg.cho_factor(K, lower=True)
    mean = Ks @ scipy.linalg.cho_solve(c, y)
    W = scipy.linalg.cho_solve(c, Ks.T)
    prior_var = float(eval_mixture_kernel(model, np.zeros(1))[0])
    var = prior_var - np.einsum("ij,ji->i", Ks, W) + obs.obs_noise_variance
    return mean, var


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Symmetric square-root factor with negative eigenvalues clamped to zero."""
    w, V = np.linalg.eigh(0.5 * (mat + mat.T))
    w = np.clip(w, 0.0, None)
    return V * np.sqrt(w)


def sample_prior(
    dss: DiscreteStateSpace,
    n_steps: int,
    seed: int,
    obs_noise_variance: float = 0.0,
    n_samples: int = 1,
    return_states: bool = False,
):
    """Draw stationary trajectories and their measured signal.

    Returns y of shape (n_samples, n_steps); with ``return_states`` also the
    latent states (n_samples, n_steps, M). Deterministic in ``seed``.
    """
    if n_steps < 1 or n_samples < 1:
        raise ValueError("n_steps and n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    M = dss.state_dim
    h = dss.H[0]
    A = BlockDiagMatrix(dss.A, dss.channel_offsets)
    Lp = _psd_sqrt(dss.Pinf)
    Lq = _psd_sqrt(dss.Q)
    X = Lp @ rng.standard_normal((M, n_samples))
    y = np.empty((n_samples, n_steps))
    states = np.empty((n_samples, n_steps, M)) if return_states else None
    for k in range(n_steps):
        if k > 0:
            X = A.matmul(X) + Lq @ rng.standard_normal((M, n_samples))
        y[:, k] = h @ X
        if return_states:
            states[:, k, :] = X.T
    if obs_noise_variance > 0:
        y = y + np.sqrt(obs_noise_variance) * rng.standard_normal(y.shape)
    if return_states:
        return y, states
    return y


def sample_posterior(
    dss: DiscreteStateSpace,
    obs: ObservationSequence,
    n_samples: int,
    seed: int,
    return_states: bool = False,
):
    """Joint posterior draws of the signal via forward filtering and backward sampling.

    Returns the measured signal of each draw, shape (n_samples, T); latent
    state trajectories are returned too when ``return_states`` is set.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    filt = kalman_filter(dss, obs, store_covariances=True)
    T, M = filt.means.shape
    h = dss.H[0]
    A = BlockDiagMatrix(dss.A, dss.channel_offsets)
    X = filt.means[-1][:, None] + _psd_sqrt(filt.covariances[-1]) @ rng.standard_normal(
        (M, n_samples)
    )
    states = np.empty((n_samples, T, M)) if return_states else None
    y = np.empty((n_samples, T))
    y[:, -1] = h @ X
    if return_states:
        states[:, -1, :] = X.T
    for k in range(T - 2, -1, -1):
        m_f = filt.means[k]
        P_f = filt.covariances[k]
        P_pred = A.matmul(A.matmul(P_f).T).T + dss.Q
        P_pred = 0.5 * (P_pred + P_pred.T)
        Z, _ = _solve_spd(P_pred, A.matmul(P_f), f"posterior sampling step {k}")
        G = Z.T
        C = P_f - G @ P_pred @ G.T
        C = 0.5 * (C + C.T)
        mean = m_f[:, None] + G @ (X - A.matmul(m_f)[:, None])
        X = mean + _psd_sqrt(C) @ rng.standard_normal((M, n_samples))
        y[:, k] = h @ X
        if return_states:
            states[:, k, :] = X.T
    if return_states:
        return y, states
    return y
