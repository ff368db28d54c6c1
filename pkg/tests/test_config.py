import json

import pytest

from spiralscat.config import ConfigError, PipelineConfig


def test_defaults_are_valid():
    cfg = PipelineConfig().validate()
    assert (cfg.Q1, cfg.J, cfg.mode) == (12, 8, "spiral")
    assert cfg.hop_samples(22050) == round(0.5 * 22050 / 16)


def test_flags_override_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"Q1": 16, "T": 0.25}))
    cfg = PipelineConfig.load(path, {"T": 1.0, "J": None})
    assert (cfg.Q1, cfg.T, cfg.J) == (16, 1.0, 8)


def test_unknown_key(tmp_path):
    with pytest.raises(ConfigError, match="unknown configuration keys"):
        PipelineConfig.from_dict({"Q3": 1})


def test_invalid_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{")
    with pytest.raises(ConfigError, match="invalid JSON"):
        PipelineConfig.load(path)
    path.write_text("[1]")
    with pytest.raises(ConfigError, match="JSON object"):
        PipelineConfig.load(path)


@pytest.mark.parametrize("doc, message", [
    ({"Q1": 0}, "Q1"),
    ({"J": 1.5}, "J"),
    ({"Q2": 3}, "Q2"),
    ({"T": -1.0}, "T must"),
    ({"T2": 0}, "T2"),
    ({"hop": 0}, "hop"),
    ({"mode": "wavelet"}, "mode"),
    ({"alpha_range": [4, 2]}, "alpha_range"),
    ({"beta_max": 6.0}, "beta_max"),
    ({"gamma_max": 0.75}, "gamma_max"),
    ({"n_beta": 0}, "n_beta"),
    ({"decimate": 0}, "decimate"),
    ({"J": 1}, "octave span"),
])
def test_invariants_named(doc, message):
    with pytest.raises(ConfigError, match=message):
        PipelineConfig.from_dict(doc)


def test_single_octave_allowed_without_spiral():
    assert PipelineConfig.from_dict({"J": 1, "mode": "joint"}).J == 1
