"""Model persistence, config parsing and CSV output."""

import numpy as np
import pytest

from specmix import (
    DataError,
    MaternComponent,
    SpectralMixtureModel,
    load_model,
    save_model,
    write_csv,
)
from specmix.config import cfg_get, empty_config, format_float, load_config, parse_float_list


def _model():
    comps = (
        MaternComponent(0.5, 1.2345678901234567, 0.01, 2 * np.pi * 123.456),
        MaternComponent(2.5, 0.1, 1.0 / 3.0, 2 * np.pi * 2000.0),
    )
    return SpectralMixtureModel(comps, 1e-4, 8000.0)


def test_model_roundtrip_exact(tmp_path):
    m = _model()
    path = tmp_path / "model.ini"
    save_model(path, m)
    back = load_model(path)
    assert back.sample_rate == m.sample_rate
    assert back.obs_noise_variance == m.obs_noise_variance
    for a, b in zip(back.components, m.components):
        # %.17g carries full float64 precision through the file
        assert a.order == b.order
        assert a.variance == b.variance
        assert a.lengthscale == b.lengthscale
        assert a.center_freq == b.center_freq


def test_load_model_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_model(tmp_path / "absent.ini")


def test_load_model_rejects_ragged_lists(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(
        "[model]\nsample_rate = 8000\nobs_noise_variance = 0.01\n"
        "orders = 0.5, 1.5\nvariances = 1.0\n"
        "lengthscales = 0.01, 0.02\ncenter_freqs_hz = 100, 200\n"
    )
    with pytest.raises(DataError):
        load_model(path)


def test_config_parsing(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(
        "[fit]\nmax_iters = 50  ; inline comment\nsmoothing_halfwidth = 8\n"
        "[experiment]\ngaps_ms = 1, 5, 10\nverbose = true\n"
    )
    cfg = load_config(path)
    assert cfg_get(cfg, "fit", "max_iters", 200, int) == 50
    assert cfg_get(cfg, "fit", "absent", 3.5, float) == 3.5
    assert cfg_get(cfg, "experiment", "verbose", False, bool) is True
    assert parse_float_list(cfg.get("experiment", "gaps_ms")) == [1.0, 5.0, 10.0]


def test_load_config_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_config(tmp_path / "none.ini")


def test_empty_config_defaults():
    cfg = empty_config()
    assert cfg_get(cfg, "fit", "max_iters", 200, int) == 200


def test_format_float_nine_digits():
    assert format_float(np.pi) == "3.14159265"
    assert format_float(1.0) == "1"
    assert format_float(-2.5e-11) == "-2.5e-11"


def test_write_csv_deterministic(tmp_path):
    rows = [[1.0, "a", None, np.float64(0.123456789123)], [2, "b", 0.5, 1e-20]]
    p1 = tmp_path / "a.csv"
    p2 = tmp_path / "b.csv"
    write_csv(p1, ["x", "name", "opt", "v"], rows)
    write_csv(p2, ["x", "name", "opt", "v"], rows)
    b1 = p1.read_bytes()
    assert b1 == p2.read_bytes()
    text = b1.decode()
    assert "\r" not in text
    lines = text.strip().split("\n")
    assert lines[0] == "x,name,opt,v"
    assert lines[1] == "1,a,,0.123456789"
    assert lines[2] == "2,b,0.5,1e-20"
