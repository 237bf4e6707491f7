"""CSV exports of a model's spectrum, kernel, Gram matrix, samples, subbands.

Everything is written as plain CSV so any plotting tool can consume it; when
a clip is supplied the spectrum view includes its periodogram and the subband
views hold the clip's smoothed posterior per channel.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio import AudioBuffer
from .config import write_csv
from .kalman import ObservationSequence, extract_subbands, kalman_filter, rts_smoother
from .kernels import SpectralMixtureModel, eval_component_kernel, eval_mixture_kernel, model_spectrum
from .kalman import sample_prior
from .statespace import discretize_model
from .whittle import compute_periodogram, smooth_spectrum


def export_views(
    model: SpectralMixtureModel,
    out_dir,
    clip: AudioBuffer | None = None,
    seed: int = 0,
    n_samples: int = 3,
    grid_size: int = 1024,
    lag_span: float | None = None,
    gram_size: int = 64,
    smoothing_halfwidth: int = 4,
) -> list[Path]:
    """Write the model views under ``out_dir`` and return the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    # spectrum: either on a uniform grid or on the clip's own bins
    if clip is None:
        freqs = np.linspace(0.0, model.nyquist, grid_size)
        power = model_spectrum(model, freqs, grid_size)
        rows = zip(freqs / (2 * np.pi), power)
        header = ["freq_hz", "model_power"]
    else:
        pgram = compute_periodogram(clip.samples, 1.0 / clip.sample_rate)
        smoothed = smooth_spectrum(pgram, smoothing_halfwidth)
        T = pgram.n_samples
        half = T // 2 + 1
        w = np.abs(pgram.freqs[:half])
        power = model_spectrum(model, w, T)
        rows = zip(w / (2 * np.pi), power, pgram.power[:half], smoothed.power[:half])
        header = ["freq_hz", "model_power", "periodogram", "smoothed_periodogram"]
    path = out_dir / "spectrum.csv"
    write_csv(path, header, rows)
    written.append(path)

    if lag_span is None:
        lag_span = min(10.0 * max(c.lengthscale for c in model.components), 2.0)
    lags = np.linspace(0.0, lag_span, grid_size)
    cols = [lags, eval_mixture_kernel(model, lags)]
    header = ["lag_s", "total"]
    for d, comp in enumerate(model.components):
        cols.append(eval_component_kernel(comp, lags))
        header.append(f"component_{d}")
    path = out_dir / "kernel.csv"
    write_csv(path, header, zip(*cols))
    written.append(path)

    t_gram = np.linspace(0.0, lag_span, gram_size)
    gram = eval_mixture_kernel(model, t_gram[:, None] - t_gram[None, :])
    header = ["t_s"] + [f"{tv:.9g}" for tv in t_gram]
    rows = ([t_gram[i]] + list(gram[i]) for i in range(gram_size))
    path = out_dir / "gram.csv"
    write_csv(path, header, rows)
    written.append(path)

    dss = discretize_model(model)
    n_steps = grid_size
    y = sample_prior(dss, n_steps, seed=seed, n_samples=n_samples)
    t = np.arange(n_steps) * model.dt
    header = ["time_s"] + [f"sample_{i}" for i in range(n_samples)]
    path = out_dir / "samples.csv"
    write_csv(path, header, zip(t, *y))
    written.append(path)

    if clip is not None:
        written.extend(export_subband_views(model, clip, out_dir, dss=dss))
    return written


def export_subband_views(
    model: SpectralMixtureModel,
    clip: AudioBuffer,
    out_dir,
    dss=None,
    missing_mask=None,
) -> list[Path]:
    """Smooth a clip under the model and write per-channel subband CSVs.

    Writes subband amplitude/phase/variance spectrogram tables plus the
    projected reconstruction with its predictive variance.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if dss is None:
        dss = discretize_model(model)
    obs = ObservationSequence(clip.samples, missing_mask, model.obs_noise_variance)
    filt = kalman_filter(dss, obs, store_covariances=True)
    post = rts_smoother(dss, filt, store_full_cov=False)
    bands = extract_subbands(dss, post)
    t = np.arange(clip.samples.size) / clip.sample_rate
    D = bands.amplitude.shape[0]
    chan_header = ["time_s"] + [f"channel_{d}" for d in range(D)]
    written = []
    for name, mat in (
        ("subband_amplitude", bands.amplitude),
        ("subband_phase", bands.phase),
        ("subband_variance", bands.real_variance),
    ):
        path = out_dir / f"{name}.csv"
        write_csv(path, chan_header, zip(t, *mat))
        written.append(path)
    path = out_dir / "reconstruction.csv"
    write_csv(
        path,
        ["time_s", "mean", "variance"],
        zip(t, post.reconstruction_mean, post.reconstruction_var),
    )
    written.append(path)
    return written
