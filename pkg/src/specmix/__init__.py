"""Spectral mixture Gaussian process filter bank for audio analysis.

A signal is modeled as a sum of frequency-shifted Matern Gaussian processes
plus white noise. The package provides the kernel and spectral-density views
of that model, its exact state-space form, Kalman filtering / RTS smoothing
(including missing data and posterior sampling), Whittle-likelihood fitting
in the frequency domain, and audio utilities with a command-line front end.
"""

from .audio import AudioBuffer, GapSpec, make_gaps, read_wav, snr_db, synth_speech_like, write_wav
from .errors import DataError, NumericalError
from .experiment import ExperimentReport, run_missing_data_experiment, write_report_csv
from .kalman import (
    FilterResult,
    ObservationSequence,
    PosteriorSummary,
    Subbands,
    dense_gp_loglik_oracle,
    dense_gp_posterior,
    extract_subbands,
    kalman_filter,
    rts_smoother,
    sample_posterior,
    sample_prior,
)
from .kernels import (
    MaternComponent,
    SpectralMixtureModel,
    baseband_spectral_density,
    eval_component_kernel,
    eval_mixture_kernel,
    model_spectrum,
    shifted_spectral_density,
)
from .statespace import (
    DiscreteStateSpace,
    LtiSde,
    apply_frequency_shift,
    assemble_model_sde,
    discretize,
    discretize_model,
    matern_baseband_sde,
    rotation_matrix,
    state_space_kernel,
)
from .config import load_model, save_model, write_csv
from .views import export_subband_views, export_views
from .whittle import (
    FitConfig,
    FitResult,
    Periodogram,
    WhittleGradient,
    compute_periodogram,
    fit,
    init_model,
    smooth_spectrum,
    whittle_gradient,
    whittle_loglik,
)

__version__ = "0.1.0"
