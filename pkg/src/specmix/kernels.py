"""Matern covariance functions, frequency-shifted mixtures, and their spectral densities.

A model is a sum of D components, each a stationary Matern kernel (order 1/2,
3/2 or 5/2) multiplied by a cosine in the lag, which shifts its spectral mass
to a center frequency. All frequencies are angular (rad/s); lags and
lengthscales are in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

VALID_ORDERS = (0.5, 1.5, 2.5)

# Numerator constant of the Matern spectral density, 2*sqrt(pi)*gamma(nu+1/2)/gamma(nu),
# so that S(w) = const * sigma2 * lam^(2 nu) / (lam^2 + w^2)^(nu + 1/2) integrates
# (over dw/2pi) to sigma2.
_DENSITY_CONST = {0.5: 2.0, 1.5: 4.0, 2.5: 16.0 / 3.0}


def _check_order(order: float) -> float:
    order = float(order)
    if order not in VALID_ORDERS:
        raise ValueError(f"Matern order must be one of {VALID_ORDERS}, got {order}")
    return order


@dataclass(frozen=True)
class MaternComponent:
    """One frequency-shifted Matern component.

    Parameters
    ----------
    order : float
        Matern smoothness, one of 0.5, 1.5, 2.5.
    variance : float
        Marginal variance sigma^2, > 0.
    lengthscale : float
        Lengthscale ell in seconds, > 0.
    center_freq : float
        Center frequency omega_0 in rad/s, >= 0.
    """

    order: float
    variance: float
    lengthscale: float
    center_freq: float = 0.0

    def __post_init__(self):
        _check_order(self.order)
        for name in ("variance", "lengthscale", "center_freq"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.variance <= 0:
            raise ValueError(f"variance must be > 0, got {self.variance}")
        if self.lengthscale <= 0:
            raise ValueError(f"lengthscale must be > 0, got {self.lengthscale}")
        if self.center_freq < 0:
            raise ValueError(f"center_freq must be >= 0, got {self.center_freq}")

    @property
    def decay_rate(self) -> float:
        """Inverse-time decay lambda = sqrt(2 nu) / ell of the baseband kernel."""
        return math.sqrt(2.0 * self.order) / self.lengthscale

    @property
    def state_dim(self) -> int:
        """Dimension of the baseband companion-form state (1, 2 or 3)."""
        return int(self.order + 0.5)


@dataclass(frozen=True)
class SpectralMixtureModel:
    """Sum of frequency-shifted Matern components plus white observation noise.

    ``components`` may be empty only for degenerate noise-only spectrum
    evaluation; inference requires at least one component.
    """

    components: tuple[MaternComponent, ...]
    obs_noise_variance: float
    sample_rate: float

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if self.obs_noise_variance < 0 or not np.isfinite(self.obs_noise_variance):
            raise ValueError(
                f"obs_noise_variance must be finite and >= 0, got {self.obs_noise_variance}"
            )
        if self.sample_rate <= 0 or not np.isfinite(self.sample_rate):
            raise ValueError(f"sample_rate must be finite and > 0, got {self.sample_rate}")

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def nyquist(self) -> float:
        """Nyquist angular frequency pi/dt in rad/s."""
        return math.pi * self.sample_rate


def eval_component_kernel(comp: MaternComponent, tau) -> np.ndarray:
    """Evaluate one component's covariance cos(w0 tau) * k_matern(tau) on a lag grid.

    Parameters
    ----------
    comp : MaternComponent
    tau : array_like
        Lags in seconds, any sign.

    Returns
    -------
    np.ndarray
        Covariance values, same shape as ``tau``.
    """
    tau = np.asarray(tau, dtype=float)
    a = np.abs(tau) * comp.decay_rate
    if comp.order == 0.5:
        poly = 1.0
    elif comp.order == 1.5:
        poly = 1.0 + a
    else:
        poly = 1.0 + a + a * a / 3.0
    base = comp.variance * poly * np.exp(-a)
    return np.cos(comp.center_freq * tau) * base


def eval_mixture_kernel(model: SpectralMixtureModel, tau) -> np.ndarray:
    """Sum of all component kernels on a lag grid (no observation noise term)."""
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    for comp in model.components:
        out = out + eval_component_kernel(comp, tau)
    return out


def baseband_spectral_density(comp: MaternComponent, omega) -> np.ndarray:
    """Two-sided spectral density of the unshifted Matern kernel.

    Normalized so that (1/2pi) * integral S(w) dw = variance; equivalently
    S(w) = c_nu * sigma^2 * lam^(2 nu) / (lam^2 + w^2)^(nu + 1/2).
    """
    omega = np.asarray(omega, dtype=float)
    lam = comp.decay_rate
    nu = comp.order
    c = _DENSITY_CONST[nu]
    return c * comp.variance * lam ** (2.0 * nu) / (lam * lam + omega * omega) ** (nu + 0.5)


def shifted_spectral_density(comp: MaternComponent, omega) -> np.ndarray:
    """Density of the cosine-modulated component: half the baseband density
    moved to +-center_freq, S(w) = (S_b(w - w0) + S_b(w + w0)) / 2."""
    omega = np.asarray(omega, dtype=float)
    w0 = comp.center_freq
    return 0.5 * (
        baseband_spectral_density(comp, omega - w0)
        + baseband_spectral_density(comp, omega + w0)
    )


def model_spectrum(model: SpectralMixtureModel, freq_grid, n_samples: int) -> np.ndarray:
    """Expected unnormalized-DFT power of ``n_samples`` model samples, per bin.

    The continuous-time component densities are scaled by n_samples/dt so the
    result is directly comparable to ``|fft(y)|**2``; the white observation
    noise contributes a flat floor of n_samples * obs_noise_variance.

    Parameters
    ----------
    model : SpectralMixtureModel
    freq_grid : array_like
        Angular frequencies in [0, pi/dt] (rad/s).
    n_samples : int
        Length T of the hypothetical record.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    freq_grid = np.asarray(freq_grid, dtype=float)
    nyq = model.nyquist
    if freq_grid.size and (freq_grid.min() < -1e-9 or freq_grid.max() > nyq * (1 + 1e-12)):
        raise ValueError("freq_grid values must lie in [0, pi/dt]")
    total = np.zeros_like(freq_grid)
    for comp in model.components:
        total = total + shifted_spectral_density(comp, freq_grid)
    return total * (n_samples / model.dt) + n_samples * model.obs_noise_variance
