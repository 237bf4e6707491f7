"""Key=value configuration files, fitted-model persistence, CSV formatting.

Configuration uses INI sections ([model], [fit], [experiment], ...) parsed
with configparser; every command-line flag can also be given there, with the
flag winning on conflict. Fitted models are saved in the same dialect under a
[model] section with explicit per-component value lists.
"""

from __future__ import annotations

import configparser
from pathlib import Path

import numpy as np

from .errors import DataError
from .kernels import MaternComponent, SpectralMixtureModel


def format_float(x: float) -> str:
    """Report formatting: 9 significant digits, no trailing noise."""
    return f"{float(x):.9g}"


def load_config(path) -> configparser.ConfigParser:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (configparser.Error, UnicodeDecodeError) as e:
        raise DataError(f"could not parse config file {path}: {e}") from e
    return parser


def empty_config() -> configparser.ConfigParser:
    return configparser.ConfigParser(inline_comment_prefixes=("#", ";"))


def cfg_get(cfg, section: str, key: str, default, convert=None):
    """Typed lookup with a default; raises DataError on unconvertible values."""
    if cfg is None or not cfg.has_option(section, key):
        return default
    raw = cfg.get(section, key).strip()
    if convert is None:
        convert = type(default) if default is not None else str
    try:
        if convert is bool:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return convert(raw)
    except (TypeError, ValueError) as e:
        raise DataError(f"bad value for [{section}] {key}: {raw!r}") from e


def parse_float_list(raw: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.replace(",", " ").split()]
    except ValueError as e:
        raise DataError(f"expected a list of numbers, got {raw!r}") from e


def save_model(path, model: SpectralMixtureModel) -> None:
    """Write a model as a [model] section readable by ``load_model``."""
    full = "%.17g"
    lines = ["[model]"]
    lines.append(f"sample_rate = {full % model.sample_rate}")
    lines.append(f"obs_noise_variance = {full % model.obs_noise_variance}")
    lines.append("orders = " + ", ".join(full % c.order for c in model.components))
    lines.append("variances = " + ", ".join(full % c.variance for c in model.components))
    lines.append("lengthscales = " + ", ".join(full % c.lengthscale for c in model.components))
    lines.append(
        "center_freqs_hz = "
        + ", ".join(full % (c.center_freq / (2.0 * np.pi)) for c in model.components)
    )
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> SpectralMixtureModel:
    cfg = load_config(path)
    if not cfg.has_section("model"):
        raise DataError(f"{path} has no [model] section")
    need = ("sample_rate", "obs_noise_variance", "orders", "variances", "lengthscales")
    for key in need:
        if not cfg.has_option("model", key):
            raise DataError(f"{path} is missing [model] {key}")
    sample_rate = cfg_get(cfg, "model", "sample_rate", None, float)
    noise = cfg_get(cfg, "model", "obs_noise_variance", None, float)
    orders = parse_float_list(cfg.get("model", "orders"))
    variances = parse_float_list(cfg.get("model", "variances"))
    lengthscales = parse_float_list(cfg.get("model", "lengthscales"))
    if cfg.has_option("model", "center_freqs_hz"):
        centers = [2.0 * np.pi * f for f in parse_float_list(cfg.get("model", "center_freqs_hz"))]
    else:
        centers = [0.0] * len(orders)
    n = len(orders)
    if not (len(variances) == len(lengthscales) == len(centers) == n) or n == 0:
        raise DataError(f"inconsistent component lists in {path}")
    try:
        comps = tuple(
            MaternComponent(o, v, l, c)
            for o, v, l, c in zip(orders, variances, lengthscales, centers)
        )
        return SpectralMixtureModel(comps, noise, sample_rate)
    except ValueError as e:
        raise DataError(f"invalid model parameters in {path}: {e}") from e


def write_csv(path, header: list[str], rows) -> None:
    """Plain deterministic CSV: floats at 9 significant digits, LF endings."""
    out = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if cell is None:
                cells.append("")
            elif isinstance(cell, float):
                cells.append(format_float(cell))
            elif isinstance(cell, (np.floating,)):
                cells.append(format_float(float(cell)))
            else:
                cells.append(str(cell))
        out.append(",".join(cells))
    Path(path).write_text("\n".join(out) + "\n")
