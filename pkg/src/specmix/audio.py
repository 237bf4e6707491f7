"""Audio I/O, gap-mask construction, reconstruction scoring, and test clips.

WAV support covers mono or stereo PCM16 and float32; stereo is downmixed by
averaging with a warning. Samples are normalized to [-1, 1) with the int16
full-scale convention 32767/32768.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.io.wavfile

from .errors import DataError

_INT16_SCALE = 32768.0


@dataclass
class AudioBuffer:
    """Mono float64 samples in [-1, 1] plus their sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float).ravel()
        self.sample_rate = int(self.sample_rate)
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass
class GapSpec:
    """Placement recipe for dropout gaps: duration, count, guard and seed."""

    gap_ms: float
    n_gaps: int = 5
    guard_ms: float = 25.0
    seed: int = 0

    def __post_init__(self):
        if self.gap_ms < 0:
            raise ValueError(f"gap_ms must be >= 0, got {self.gap_ms}")
        if self.n_gaps < 1:
            raise ValueError(f"n_gaps must be >= 1, got {self.n_gaps}")
        if self.guard_ms < 0:
            raise ValueError(f"guard_ms must be >= 0, got {self.guard_ms}")


def read_wav(path) -> AudioBuffer:
    """Read a PCM16 or float32 WAV file as a normalized mono buffer."""
    try:
        rate, data = scipy.io.wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as e:
        raise DataError(f"could not read WAV file {path}: {e}") from e
    if data.dtype == np.int16:
        samples = data.astype(float) / _INT16_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(float)
    else:
        raise DataError(f"unsupported WAV sample format {data.dtype} in {path}")
    if samples.ndim == 2:
        warnings.warn(f"downmixing {samples.shape[1]} channels to mono by averaging")
        samples = samples.mean(axis=1)
    elif samples.ndim != 1:
        raise DataError(f"unsupported WAV layout with shape {data.shape} in {path}")
    if samples.size == 0:
        raise DataError(f"WAV file {path} contains no samples")
    return AudioBuffer(samples, rate)


def write_wav(path, buf: AudioBuffer, fmt: str = "float32") -> None:
    """Write a mono buffer as float32 (default) or PCM16.

    float32 round-trips bit-exactly through ``read_wav``; PCM16 clips to
    full scale and quantizes.
    """
    if fmt == "float32":
        data = buf.samples.astype(np.float32)
    elif fmt == "int16":
        scaled = np.round(buf.samples * _INT16_SCALE)
        data = np.clip(scaled, -32768, 32767).astype(np.int16)
    else:
        raise ValueError(f"unsupported output format {fmt!r}")
    scipy.io.wavfile.write(path, buf.sample_rate, data)


def make_gaps(n_samples: int, sample_rate: float, spec: GapSpec) -> np.ndarray:
    """Place non-overlapping dropout gaps; True marks missing samples.

    Gaps stay clear of a guard margin at both ends; placement is uniform over
    the feasible arrangements and deterministic in ``spec.seed``. A zero gap
    duration means no dropout at all and yields an empty mask.
    """
    if spec.gap_ms == 0:
        return np.zeros(n_samples, dtype=bool)
    gap_len = max(1, int(round(spec.gap_ms * sample_rate / 1000.0)))
    guard = int(round(spec.guard_ms * sample_rate / 1000.0))
    usable = n_samples - 2 * guard
    total = spec.n_gaps * gap_len
    if total > n_samples // 2:
        raise DataError(
            f"gaps cover {total} samples, more than half the record ({n_samples})"
        )
    free = usable - total
    if usable <= 0 or free < 0:
        raise DataError(
            f"cannot place {spec.n_gaps} gaps of {gap_len} samples in "
            f"{usable} usable samples (guard {guard} per side)"
        )
    rng = np.random.default_rng(spec.seed)
    slack = np.sort(rng.integers(0, free + 1, size=spec.n_gaps))
    mask = np.zeros(n_samples, dtype=bool)
    for i, s in enumerate(slack):
        start = guard + int(s) + i * gap_len
        mask[start : start + gap_len] = True
    return mask


def snr_db(reference, reconstruction, mask=None, cap: float = 99.0) -> float:
    """Signal-to-noise ratio of a reconstruction over the masked samples, in dB.

    ``mask`` selects the scored samples (default: all). A perfect match is
    capped at ``cap`` dB, and an empty mask counts as perfect (nothing was
    lost). Zero reference energy over a nonempty scored region is undefined
    and raises DataError.
    """
    reference = np.asarray(reference, dtype=float).ravel()
    reconstruction = np.asarray(reconstruction, dtype=float).ravel()
    if reference.shape != reconstruction.shape:
        raise ValueError("reference and reconstruction lengths differ")
    if mask is None:
        mask = np.ones(reference.shape, dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool).ravel()
    if not mask.any():
        return cap
    ref = reference[mask]
    err = ref - reconstruction[mask]
    num = float(ref @ ref)
    den = float(err @ err)
    if num == 0.0:
        raise DataError("zero reference energy over the scored samples")
    if den == 0.0:
        return cap
    return min(10.0 * np.log10(num / den), cap)


def _smooth_track(rng, n: int, sample_rate: float, cutoff_hz: float) -> np.ndarray:
    """Zero-mean, unit-ish-scale slowly varying track via windowed noise."""
    width = max(3, int(sample_rate / cutoff_hz) | 1)
    noise = rng.standard_normal(n + width)
    window = np.hanning(width)
    window /= window.sum()
    track = np.convolve(noise, window, mode="same")[:n]
    scale = track.std()
    return track / scale if scale > 0 else track


def synth_speech_like(
    duration: float, sample_rate: int, seed: int, n_harmonics: int = 12
) -> AudioBuffer:
    """Synthetic voiced-speech stand-in: drifting pitch, breathing harmonics.

    A slowly wandering fundamental (100-200 Hz) drives a harmonic stack with
    per-harmonic slow amplitude modulation under a fixed two-bump spectral
    envelope, plus a faint noise floor. Deterministic in ``seed``.
    """
    if duration <= 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate

    f0_base = rng.uniform(110.0, 185.0)
    f0 = f0_base * (1.0 + 0.08 * _smooth_track(rng, n, sample_rate, cutoff_hz=3.0))
    phase0 = 2.0 * np.pi * np.cumsum(f0) / sample_rate

    bump1 = rng.uniform(300.0, 900.0)
    bump2 = rng.uniform(1200.0, 2600.0)
    out = np.zeros(n)
    max_harm = int(0.45 * sample_rate / f0.max())
    for k in range(1, min(n_harmonics, max_harm) + 1):
        fk = k * f0_base
        envelope = (
            1.0 / k
            * (
                np.exp(-0.5 * ((fk - bump1) / 250.0) ** 2)
                + 0.7 * np.exp(-0.5 * ((fk - bump2) / 500.0) ** 2)
                + 0.08
            )
        )
        am = 1.0 + 0.35 * _smooth_track(rng, n, sample_rate, cutoff_hz=5.0)
        out += envelope * np.clip(am, 0.05, None) * np.sin(k * phase0 + rng.uniform(0, 2 * np.pi))
    out += 0.004 * rng.standard_normal(n)
    peak = np.max(np.abs(out))
    if peak > 0:
        out *= 0.5 / peak
    return AudioBuffer(out, sample_rate)
