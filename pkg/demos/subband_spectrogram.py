"""A spectrogram with error bars.

Fits a model to a synthetic clip and then runs the smoother once to get,
for every channel, the posterior amplitude, phase and variance at every
sample: a probabilistic time-frequency analysis of the clip. Unlike an
STFT there is no windowing tradeoff, and masking part of the signal
simply widens the posterior instead of leaving holes.

Outputs in ``demos/output/subband_spectrogram/``: subband_amplitude.csv,
subband_phase.csv, subband_variance.csv, reconstruction.csv.

Run:  python demos/subband_spectrogram.py
"""

from pathlib import Path

import numpy as np

from specmix import (
    FitConfig,
    compute_periodogram,
    export_subband_views,
    fit,
    init_model,
    synth_speech_like,
)

OUT = Path(__file__).parent / "output" / "subband_spectrogram"
FS = 8000


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    clip = synth_speech_like(0.4, FS, seed=12)

    print("fitting 24 channels ...")
    start = init_model(24, FS, order=1.5, signal=clip.samples, lengthscale_init=0.004)
    model = fit(
        start, compute_periodogram(clip.samples, 1.0 / FS), FitConfig(max_iters=150)
    ).model

    written = export_subband_views(model, clip, OUT)
    for path in written:
        print(f"wrote {path}")

    # where does the energy sit? report the three loudest channels
    amp = np.loadtxt(OUT / "subband_amplitude.csv", delimiter=",", skiprows=1)
    energy = (amp[:, 1:] ** 2).mean(axis=0)
    top = np.argsort(energy)[::-1][:3]
    centers = [c.center_freq / (2 * np.pi) for c in model.components]
    for d in top:
        print(f"channel {d:2d} at {centers[d]:7.1f} Hz: mean squared amplitude {energy[d]:.4f}")


if __name__ == "__main__":
    main()
