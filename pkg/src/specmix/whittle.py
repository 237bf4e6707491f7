"""Frequency-domain (Whittle) likelihood, its gradient, and model fitting.

The periodogram uses the unnormalized DFT, so its expected value per bin is
the model spectrum of ``model_spectrum`` (component densities scaled by T/dt
plus the T * noise-variance floor). The likelihood drops the additive
constant: loglik = -1/2 * sum_i (log g_i + P_i / g_i).

Fitting is plain gradient ascent on log-parameters (center frequencies stay
in raw rad/s, clipped to the Nyquist interval) with a backtracking step so
the objective trace is non-decreasing by construction; by default it targets
a circularly smoothed periodogram, which widens basins of attraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .kernels import (
    _DENSITY_CONST,
    MaternComponent,
    SpectralMixtureModel,
    model_spectrum,
)


@dataclass(frozen=True)
class Periodogram:
    """Unnormalized-DFT power per bin, with bin frequencies in rad/s.

    Bins follow FFT order over the full two-sided grid; ``n_samples`` is the
    record length T that produced the power values.
    """

    freqs: np.ndarray
    power: np.ndarray
    n_samples: int
    dt: float

    def __post_init__(self):
        if self.freqs.shape != self.power.shape or self.freqs.ndim != 1:
            raise ValueError("freqs and power must be 1-d arrays of equal length")
        if self.n_samples < 1 or self.dt <= 0:
            raise ValueError("n_samples must be >= 1 and dt > 0")


def compute_periodogram(y, dt: float) -> Periodogram:
    """Periodogram |fft(y)|^2 on the two-sided bin grid.

    Satisfies Parseval exactly: sum(power) == T * sum(y**2) up to rounding.
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size < 1:
        raise ValueError("need at least one sample")
    if not np.all(np.isfinite(y)):
        raise ValueError("input contains non-finite samples")
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    Y = np.fft.fft(y)
    power = np.abs(Y) ** 2
    freqs = 2.0 * math.pi * np.fft.fftfreq(y.size, dt)
    return Periodogram(freqs, power, y.size, float(dt))


def smooth_spectrum(pgram: Periodogram, halfwidth: int = 4) -> Periodogram:
    """Circular moving average of the power with window 2*halfwidth + 1.

    Total power is preserved exactly; halfwidth 0 returns an unsmoothed copy.
    """
    if halfwidth < 0:
        raise ValueError(f"halfwidth must be >= 0, got {halfwidth}")
    n = pgram.power.size
    if 2 * halfwidth + 1 > n:
        raise ValueError(f"window {2 * halfwidth + 1} exceeds bin count {n}")
    if halfwidth == 0:
        return Periodogram(pgram.freqs.copy(), pgram.power.copy(), pgram.n_samples, pgram.dt)
    padded = np.concatenate([pgram.power[-halfwidth:], pgram.power, pgram.power[:halfwidth]])
    kernel = np.full(2 * halfwidth + 1, 1.0 / (2 * halfwidth + 1))
    smoothed = np.convolve(padded, kernel, mode="valid")
    return Periodogram(pgram.freqs.copy(), smoothed, pgram.n_samples, pgram.dt)


def whittle_loglik(model: SpectralMixtureModel, pgram: Periodogram) -> float:
    """Whittle log-likelihood of the model against a periodogram (constant dropped)."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        gamma = model_spectrum(model, np.abs(pgram.freqs), pgram.n_samples)
    if not np.all(np.isfinite(gamma)) or np.any(gamma <= 0):
        raise ValueError("model spectrum must be positive and finite at every bin")
    return float(-0.5 * np.sum(np.log(gamma) + pgram.power / gamma))


@dataclass
class WhittleGradient:
    """Gradient of the Whittle log-likelihood in the fitting parametrization.

    Variances, lengthscales and the noise variance are differentiated with
    respect to their logarithm; center frequencies in raw rad/s.
    """

    d_log_variance: np.ndarray
    d_log_lengthscale: np.ndarray
    d_center_freq: np.ndarray
    d_log_noise_variance: float


def whittle_gradient(model: SpectralMixtureModel, pgram: Periodogram) -> WhittleGradient:
    """Analytic gradient matching ``whittle_loglik``."""
    w = np.abs(pgram.freqs)
    T = pgram.n_samples
    scale = T / model.dt
    D = model.n_components

    gamma = np.full(w.shape, T * model.obs_noise_variance)
    parts = []
    for comp in model.components:
        lam = comp.decay_rate
        nu = comp.order
        c = _DENSITY_CONST[nu]
        um = w - comp.center_freq
        up = w + comp.center_freq
        dm = lam * lam + um * um
        dp = lam * lam + up * up
        amp = c * comp.variance * lam ** (2.0 * nu)
        Sm = amp * dm ** -(nu + 0.5)
        Sp = amp * dp ** -(nu + 0.5)
        parts.append((comp, um, up, dm, dp, Sm, Sp))
        gamma = gamma + 0.5 * scale * (Sm + Sp)
    if not np.all(np.isfinite(gamma)) or np.any(gamma <= 0):
        raise ValueError("model spectrum must be positive and finite at every bin")
    # d loglik / d gamma_i summed against d gamma_i / d theta
    r = -0.5 * (gamma - pgram.power) / gamma**2

    d_lv = np.empty(D)
    d_ll = np.empty(D)
    d_cf = np.empty(D)
    for d, (comp, um, up, dm, dp, Sm, Sp) in enumerate(parts):
        lam = comp.decay_rate
        nu = comp.order
        two_nu_1 = 2.0 * nu + 1.0
        shift = 0.5 * (Sm + Sp)
        d_lv[d] = float(r @ (scale * shift))
        dS_dlogell = 0.5 * (
            Sm * (two_nu_1 * lam * lam / dm - 2.0 * nu)
            + Sp * (two_nu_1 * lam * lam / dp - 2.0 * nu)
        )
        d_ll[d] = float(r @ (scale * dS_dlogell))
        dS_domega = 0.5 * (Sm * (two_nu_1 * um / dm) - Sp * (two_nu_1 * up / dp))
        d_cf[d] = float(r @ (scale * dS_domega))
    d_ln = float(r @ np.full(w.shape, T * model.obs_noise_variance))
    return WhittleGradient(d_lv, d_ll, d_cf, d_ln)


@dataclass
class FitConfig:
    """Step-size control and trainability switches for ``fit``."""

    smoothing_halfwidth: int = 4
    max_iters: int = 200
    grad_tolerance: float = 1e-6
    step_init: float = 0.5
    step_shrink: float = 0.5
    step_grow: float = 2.0
    min_step: float = 1e-13
    objective_tolerance: float = 1e-10
    train_variances: bool = True
    train_lengthscales: bool = True
    train_center_freqs: bool = True
    train_noise: bool = True


@dataclass
class FitResult:
    model: SpectralMixtureModel
    objective_trace: list[float] = field(default_factory=list)
    n_iters: int = 0
    converged: bool = False
    grad_norm: float = float("nan")


def _pack(model: SpectralMixtureModel) -> np.ndarray:
    D = model.n_components
    theta = np.empty(3 * D + 1)
    for d, comp in enumerate(model.components):
        theta[d] = math.log(comp.variance)
        theta[D + d] = math.log(comp.lengthscale)
        theta[2 * D + d] = comp.center_freq * model.dt
    theta[3 * D] = math.log(model.obs_noise_variance)
    return theta


def _unpack(theta: np.ndarray, template: SpectralMixtureModel) -> SpectralMixtureModel:
    D = template.n_components
    comps = []
    for d, comp in enumerate(template.components):
        comps.append(
            MaternComponent(
                comp.order,
                math.exp(theta[d]),
                math.exp(theta[D + d]),
                theta[2 * D + d] / template.dt,
            )
        )
    return replace(
        template, components=tuple(comps), obs_noise_variance=math.exp(theta[3 * D])
    )


def fit(
    model_init: SpectralMixtureModel, pgram: Periodogram, config: FitConfig | None = None
) -> FitResult:
    """Maximize the Whittle log-likelihood by projected gradient ascent.

    The optimized objective is evaluated on the smoothed periodogram
    (``config.smoothing_halfwidth``); the returned trace holds the objective
    after the initial point and each accepted step, so it is non-decreasing.
    Center frequencies are clipped to [0, pi/dt] after every step. A NaN or
    non-improving objective shrinks the step; if no improving step exists the
    last valid iterate is returned.
    """
    if model_init.n_components == 0:
        raise ValueError("fit requires at least one component")
    if model_init.obs_noise_variance <= 0:
        raise ValueError("fit requires a positive obs_noise_variance as a spectral floor")
    config = config or FitConfig()
    target = smooth_spectrum(pgram, config.smoothing_halfwidth)
    D = model_init.n_components
    dt = model_init.dt

    mask = np.concatenate(
        [
            np.full(D, config.train_variances, dtype=float),
            np.full(D, config.train_lengthscales, dtype=float),
            np.full(D, config.train_center_freqs, dtype=float),
            [float(config.train_noise)],
        ]
    )

    def internal_grad(m: SpectralMixtureModel) -> np.ndarray:
        g = whittle_gradient(m, target)
        vec = np.concatenate(
            [g.d_log_variance, g.d_log_lengthscale, g.d_center_freq / dt, [g.d_log_noise_variance]]
        )
        return vec * mask

    # lengthscales far below the sample interval are unidentifiable from
    # sampled data and cannot be discretized afterwards; keep them resolvable
    min_log_ell = math.log(dt / 50.0)

    def project(theta: np.ndarray) -> np.ndarray:
        out = theta.copy()
        out[D : 2 * D] = np.maximum(out[D : 2 * D], min_log_ell)
        out[2 * D : 3 * D] = np.clip(out[2 * D : 3 * D], 0.0, math.pi)
        return out

    def restore_frozen(m: SpectralMixtureModel) -> SpectralMixtureModel:
        # frozen parameter groups must come back bit-identical, not through
        # an exp(log(x)) roundtrip
        if (
            config.train_variances
            and config.train_lengthscales
            and config.train_center_freqs
            and config.train_noise
        ):
            return m
        comps = tuple(
            MaternComponent(
                c.order,
                c.variance if config.train_variances else c0.variance,
                c.lengthscale if config.train_lengthscales else c0.lengthscale,
                c.center_freq if config.train_center_freqs else c0.center_freq,
            )
            for c0, c in zip(model_init.components, m.components)
        )
        noise = m.obs_noise_variance if config.train_noise else model_init.obs_noise_variance
        return SpectralMixtureModel(comps, noise, m.sample_rate)

    theta = project(_pack(model_init))
    model = _unpack(theta, model_init)
    obj = whittle_loglik(model, target)
    trace = [obj]
    step = config.step_init
    converged = False
    grad_norm = float("nan")
    it = 0
    while it < config.max_iters:
        g = internal_grad(model)
        grad_norm = float(np.max(np.abs(g))) if g.size else 0.0
        if grad_norm <= config.grad_tolerance:
            converged = True
            break
        improved = False
        while step >= config.min_step:
            cand_theta = project(theta + step * g)
            try:
                cand_model = _unpack(cand_theta, model_init)
                cand_obj = whittle_loglik(cand_model, target)
            except (ValueError, OverflowError):
                cand_obj = float("nan")
            if np.isfinite(cand_obj) and cand_obj > obj:
                improved = True
                break
            step *= config.step_shrink
        if not improved:
            break
        gain = cand_obj - obj
        theta, model, obj = cand_theta, cand_model, cand_obj
        trace.append(obj)
        it += 1
        step = min(step * config.step_grow, config.step_init)
        if gain <= config.objective_tolerance * (1.0 + abs(obj)):
            converged = True
            break
    return FitResult(restore_frozen(model), trace, it, converged, grad_norm)


def init_model(
    n_components: int,
    sample_rate: float,
    order: float = 1.5,
    nyquist_fraction: float = 0.95,
    signal=None,
    variance_init: float | None = None,
    lengthscale_init: float = 0.01,
    noise_variance: float | None = None,
) -> SpectralMixtureModel:
    """Evenly spaced starting bank below the Nyquist frequency.

    Centers sit at nyquist_fraction * pi * sample_rate * j / D for
    j = 1..D, so none land on 0 or Nyquist. When ``signal`` is given the
    component variances split its empirical variance equally and the noise
    floor defaults to 1% of it.
    """
    if n_components < 1:
        raise ValueError(f"n_components must be >= 1, got {n_components}")
    if not 0 < nyquist_fraction <= 1:
        raise ValueError(f"nyquist_fraction must be in (0, 1], got {nyquist_fraction}")
    nyq = math.pi * sample_rate
    if signal is not None:
        total_var = float(np.var(np.asarray(signal, dtype=float)))
        if total_var <= 0:
            raise ValueError("signal variance must be positive to initialize from data")
    else:
        total_var = float(n_components)
    per_var = variance_init if variance_init is not None else total_var / n_components
    noise = noise_variance if noise_variance is not None else 0.01 * total_var
    comps = tuple(
        MaternComponent(
            order,
            per_var,
            lengthscale_init,
            nyq * nyquist_fraction * (d + 1) / n_components,
        )
        for d in range(n_components)
    )
    return SpectralMixtureModel(comps, noise, sample_rate)
