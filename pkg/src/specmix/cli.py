"""Command-line interface: fit, analyze, impute, sample, experiment, views.

Every flag can also be set in the INI config file given with --config; the
flag wins on conflict. Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiment as exp
from .audio import AudioBuffer, GapSpec, make_gaps, read_wav, snr_db, synth_speech_like, write_wav
from .config import cfg_get, format_float, load_config, load_model, parse_float_list, save_model, write_csv
from .errors import DataError, NumericalError
from .kalman import ObservationSequence, kalman_filter, rts_smoother, sample_posterior, sample_prior
from .statespace import discretize_model
from .views import export_subband_views, export_views
from .whittle import FitConfig, compute_periodogram, fit, init_model


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(sp):
    sp.add_argument("--config", help="INI configuration file")
    sp.add_argument("--seed", type=int, default=None, help="random seed")
    sp.add_argument(
        "--order", type=float, choices=(0.5, 1.5, 2.5), default=None, help="Matern order"
    )
    sp.add_argument("--filters", type=int, default=None, help="number of components D")
    sp.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="specmix", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("fit", help="estimate a model from a WAV file")
    _add_common(sp)
    sp.add_argument("--input", required=True, help="input WAV")

    sp = sub.add_parser("analyze", help="export a clip's probabilistic subband spectrogram")
    _add_common(sp)
    sp.add_argument("--input", required=True, help="input WAV")
    sp.add_argument("--model", required=True, help="fitted model file")

    sp = sub.add_parser("impute", help="drop gaps from a clip and reconstruct them")
    _add_common(sp)
    sp.add_argument("--input", required=True, help="input WAV")
    sp.add_argument("--model", default=None, help="fitted model file (default: fit first)")
    sp.add_argument("--gap-ms", type=float, default=None, help="gap duration in ms")
    sp.add_argument("--n-gaps", type=int, default=None, help="number of gaps")
    sp.add_argument("--guard-ms", type=float, default=None, help="guard margin in ms")

    sp = sub.add_parser("sample", help="draw prior or posterior sample WAVs from a model")
    _add_common(sp)
    sp.add_argument("--model", required=True, help="fitted model file")
    sp.add_argument(
        "--input", default=None, help="condition on this WAV and draw posterior samples"
    )
    sp.add_argument("--duration", type=float, default=None, help="seconds per prior sample")
    sp.add_argument("--count", type=int, default=None, help="number of samples")
    sp.add_argument("--with-noise", action="store_true", help="add observation noise")

    sp = sub.add_parser("experiment", help="missing-data sweep over orders and gap sizes")
    _add_common(sp)
    sp.add_argument(
        "--input",
        action="append",
        default=None,
        help="clip WAV to use instead of synthetic speech (repeatable)",
    )

    sp = sub.add_parser("views", help="export spectrum/kernel/Gram/sample CSVs")
    _add_common(sp)
    sp.add_argument("--model", required=True, help="fitted model file")
    sp.add_argument("--input", default=None, help="optional clip WAV for data views")
    return p


def _cfg(args):
    return load_config(args.config) if args.config else None


def _pick(flag, cfg, section, key, default, convert=None):
    if flag is not None:
        return flag
    return cfg_get(cfg, section, key, default, convert)


def _fit_config(cfg) -> FitConfig:
    fc = FitConfig()
    fc.smoothing_halfwidth = cfg_get(cfg, "fit", "smoothing_halfwidth", fc.smoothing_halfwidth)
    fc.max_iters = cfg_get(cfg, "fit", "max_iters", fc.max_iters)
    fc.grad_tolerance = cfg_get(cfg, "fit", "grad_tolerance", fc.grad_tolerance)
    fc.step_init = cfg_get(cfg, "fit", "step_init", fc.step_init)
    fc.train_variances = cfg_get(cfg, "fit", "train_variances", fc.train_variances)
    fc.train_lengthscales = cfg_get(cfg, "fit", "train_lengthscales", fc.train_lengthscales)
    fc.train_center_freqs = cfg_get(cfg, "fit", "train_center_freqs", fc.train_center_freqs)
    fc.train_noise = cfg_get(cfg, "fit", "train_noise", fc.train_noise)
    return fc


def _fit_model_to_clip(clip: AudioBuffer, args, cfg):
    n_filters = _pick(args.filters, cfg, "model", "filters", 40)
    order = _pick(args.order, cfg, "model", "order", 1.5)
    lengthscale = cfg_get(cfg, "model", "lengthscale", 0.005)
    nyq_frac = cfg_get(cfg, "model", "nyquist_fraction", 0.95)
    noise = cfg_get(cfg, "model", "noise_variance", None, float)
    start = init_model(
        n_filters,
        clip.sample_rate,
        order=order,
        nyquist_fraction=nyq_frac,
        signal=clip.samples,
        lengthscale_init=lengthscale,
        noise_variance=noise,
    )
    pgram = compute_periodogram(clip.samples, 1.0 / clip.sample_rate)
    return fit(start, pgram, _fit_config(cfg))


def cmd_fit(args) -> int:
    cfg = _cfg(args)
    clip = read_wav(args.input)
    result = _fit_model_to_clip(clip, args, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / "model.ini"
    save_model(model_path, result.model)
    write_csv(
        out / "fit_trace.csv",
        ["iteration", "objective"],
        ((i, v) for i, v in enumerate(result.objective_trace)),
    )
    print(
        f"fitted {result.model.n_components} components in {result.n_iters} iterations "
        f"(objective {format_float(result.objective_trace[-1])}, converged={result.converged})"
    )
    print(f"wrote {model_path}")
    return 0


def cmd_analyze(args) -> int:
    clip = read_wav(args.input)
    model = load_model(args.model)
    if clip.sample_rate != round(model.sample_rate):
        raise DataError(
            f"clip rate {clip.sample_rate} != model rate {model.sample_rate:g}"
        )
    written = export_subband_views(model, clip, args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_impute(args) -> int:
    cfg = _cfg(args)
    clip = read_wav(args.input)
    if args.model:
        model = load_model(args.model)
        if clip.sample_rate != round(model.sample_rate):
            raise DataError(
                f"clip rate {clip.sample_rate} != model rate {model.sample_rate:g}"
            )
    else:
        model = _fit_model_to_clip(clip, args, cfg).model
    gap_ms = _pick(args.gap_ms, cfg, "impute", "gap_ms", 10.0)
    n_gaps = _pick(args.n_gaps, cfg, "impute", "n_gaps", 5)
    guard_ms = _pick(args.guard_ms, cfg, "impute", "guard_ms", 25.0)
    seed = _pick(args.seed, cfg, "impute", "seed", 0)
    mask = make_gaps(
        clip.samples.size, clip.sample_rate, GapSpec(gap_ms, n_gaps, guard_ms, seed)
    )
    dss = discretize_model(model)
    obs = ObservationSequence(clip.samples, mask, model.obs_noise_variance)
    filt = kalman_filter(dss, obs, store_covariances=True)
    post = rts_smoother(dss, filt, store_full_cov=False)
    imputed = np.where(mask, post.reconstruction_mean, clip.samples)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_wav(out / "imputed.wav", AudioBuffer(imputed, clip.sample_rate))
    t = np.arange(clip.samples.size) / clip.sample_rate
    write_csv(
        out / "imputation.csv",
        ["time_s", "original", "missing", "reconstruction_mean", "reconstruction_var", "imputed"],
        zip(t, clip.samples, mask.astype(int), post.reconstruction_mean, post.reconstruction_var, imputed),
    )
    gap_snr = snr_db(clip.samples, post.reconstruction_mean, mask)
    global_snr = snr_db(clip.samples, imputed)
    print(f"gap SNR {format_float(gap_snr)} dB, global SNR {format_float(global_snr)} dB")
    print(f"wrote {out / 'imputed.wav'} and {out / 'imputation.csv'}")
    return 0


def cmd_sample(args) -> int:
    cfg = _cfg(args)
    model = load_model(args.model)
    duration = _pick(args.duration, cfg, "sample", "duration", 1.0)
    count = _pick(args.count, cfg, "sample", "count", 1)
    seed = _pick(args.seed, cfg, "sample", "seed", 0)
    dss = discretize_model(model)
    rate = int(round(model.sample_rate))
    if args.input:
        clip = read_wav(args.input)
        if clip.sample_rate != rate:
            raise DataError(
                f"clip rate {clip.sample_rate} != model rate {model.sample_rate:g}"
            )
        obs = ObservationSequence.from_values(clip.samples, model.obs_noise_variance)
        y = sample_posterior(dss, obs, count, seed)
        stem = "posterior_sample"
    else:
        n_steps = int(round(duration * model.sample_rate))
        if n_steps < 1:
            raise DataError(f"duration {duration}s is shorter than one sample")
        y = sample_prior(dss, n_steps, seed=seed, n_samples=count)
        stem = "sample"
    if args.with_noise:
        rng = np.random.default_rng(seed + 1)
        y = y + np.sqrt(model.obs_noise_variance) * rng.standard_normal(y.shape)
    peak = np.max(np.abs(y))
    if peak > 1.0:
        y = y / peak
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(count):
        path = out / f"{stem}_{i:03d}.wav"
        write_wav(path, AudioBuffer(y[i], rate))
        print(f"wrote {path}")
    return 0


def cmd_experiment(args) -> int:
    cfg = _cfg(args)
    seed = _pick(args.seed, cfg, "experiment", "seed", 0)
    n_filters = _pick(args.filters, cfg, "experiment", "filters", 40)
    orders = parse_float_list(cfg_get(cfg, "experiment", "orders", "0.5, 1.5, 2.5"))
    if args.order is not None:
        orders = [args.order]
    gaps_ms = parse_float_list(cfg_get(cfg, "experiment", "gaps_ms", "1, 5, 10, 20"))
    n_clips = cfg_get(cfg, "experiment", "n_clips", 5)
    clip_duration = cfg_get(cfg, "experiment", "clip_duration", 0.5)
    clip_rate = cfg_get(cfg, "experiment", "clip_sample_rate", 8000)
    n_gaps = cfg_get(cfg, "experiment", "n_gaps", 5)
    guard_ms = cfg_get(cfg, "experiment", "guard_ms", 25.0)
    lengthscale_init = cfg_get(cfg, "experiment", "lengthscale_init", 0.004)
    clip_paths = args.input or cfg_get(cfg, "experiment", "clips", "").split()
    if clip_paths:
        clips = [read_wav(p) for p in clip_paths]
    else:
        clips = [
            synth_speech_like(clip_duration, clip_rate, exp.derive_cell_seed(seed, 10_000 + i))
            for i in range(n_clips)
        ]
    report = exp.run_missing_data_experiment(
        clips,
        orders=orders,
        gaps_ms=gaps_ms,
        n_filters=n_filters,
        master_seed=seed,
        fit_config=_fit_config(cfg),
        n_gaps=n_gaps,
        guard_ms=guard_ms,
        lengthscale_init=lengthscale_init,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.csv"
    exp.write_report_csv(path, report)
    print("order  gap_ms  n  median_snr_db  se_snr_db")
    for a in report.aggregates:
        med = format_float(a.median_snr_db) if a.median_snr_db is not None else "-"
        se = format_float(a.se_snr_db) if a.se_snr_db is not None else "-"
        print(f"{a.order:<6g} {a.gap_ms:<7g} {a.n_ok:<2d} {med:<14s} {se}")
    print(f"wrote {path}")
    return 0


def cmd_views(args) -> int:
    cfg = _cfg(args)
    model = load_model(args.model)
    clip = read_wav(args.input) if args.input else None
    if clip is not None and clip.sample_rate != round(model.sample_rate):
        raise DataError(f"clip rate {clip.sample_rate} != model rate {model.sample_rate:g}")
    seed = _pick(args.seed, cfg, "views", "seed", 0)
    n_samples = cfg_get(cfg, "views", "n_samples", 3)
    grid_size = cfg_get(cfg, "views", "grid_size", 1024)
    lag_span = cfg_get(cfg, "views", "lag_span", None, float)
    written = export_views(
        model, args.out, clip=clip, seed=seed, n_samples=n_samples,
        grid_size=grid_size, lag_span=lag_span,
    )
    for path in written:
        print(f"wrote {path}")
    return 0


_COMMANDS = {
    "fit": cmd_fit,
    "analyze": cmd_analyze,
    "impute": cmd_impute,
    "sample": cmd_sample,
    "experiment": cmd_experiment,
    "views": cmd_views,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:  # --help
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 3
    except np.linalg.LinAlgError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
