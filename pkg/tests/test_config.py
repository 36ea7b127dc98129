import os
from pathlib import Path

import pytest

from visual_words.config import Config, load_config
from visual_words.errors import ConfigError

FIXTURE = Path(__file__).parent / "visual_words.yaml"


def test_load_config():
    os.environ["VISUAL_WORDS_CONFIG"] = str(FIXTURE)
    config = load_config()
    assert config is not None
    assert config.localize.seed_fraction == 0.12
    assert config.recognizer.k == 3
    assert config.recognizer.distance == "interp"
    assert config.recognizer.interp_len == 24
    assert config.recognizer.weights == [1, 1, 0.5, 0.5, 1, 1, 1, 2]
    assert not config.recognizer.tune_weights
    assert config.synth.vocabulary_size == 4
    assert config.synth.noise_sigma == 2.0
    assert config.evaluation.vsp_activity == 0.1
    # untouched values keep their defaults
    assert config.features.resize == 50
    assert config.synth.repetitions == 5
    assert config.localize.threshold_floor == 0.01


def test_missing_file_gives_defaults(tmp_path):
    os.environ["VISUAL_WORDS_CONFIG"] = str(tmp_path / "nothing.yaml")
    config = load_config()
    assert config.recognizer.k == 5
    assert config.recognizer.distance == "dtw"
    assert config.recognizer.weights == [1.0] * 8
    assert config.synth.vocabulary_size == 10
    assert config.synth.speakers == 3


def test_malformed_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("recognizer: [k: 3\n")
    os.environ["VISUAL_WORDS_CONFIG"] = str(path)
    with pytest.raises(ConfigError):
        load_config()


def test_unknown_key(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("recognizer:\n  neighbours: 3\n")
    os.environ["VISUAL_WORDS_CONFIG"] = str(path)
    with pytest.raises(ConfigError):
        load_config()


def test_out_of_range_value(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("recognizer:\n  k: 0\n")
    os.environ["VISUAL_WORDS_CONFIG"] = str(path)
    with pytest.raises(ConfigError, match="k must be"):
        load_config()


@pytest.mark.parametrize(
    "section, key, value",
    [
        ("recognizer", "distance", "euclid"),
        ("recognizer", "interp_len", 1),
        ("recognizer", "weights", [1.0] * 7),
        ("recognizer", "weights", [0.0] * 8),
        ("localize", "seed_fraction", 1.0),
        ("synth", "vocabulary_size", 0),
        ("synth", "sessions", 3),
        ("synth", "noise_sigma", -1.0),
        ("synth", "frames_min", 40),
        ("synth", "vsp_speakers", 4),
    ],
)
def test_validate_rejects(section, key, value):
    config = Config()
    setattr(config[section], key, value)
    with pytest.raises(ConfigError):
        config.validate()


@pytest.mark.parametrize(
    "section, key, value",
    [
        ("recognizer", "k", "three"),
        ("recognizer", "k", 2.5),
        ("recognizer", "k", True),
        ("recognizer", "distance", 3),
        ("recognizer", "weights", "1,1,1,1,1,1,1,1"),
        ("recognizer", "weights", [1, 1, 1, 1, 1, 1, 1, "x"]),
        ("recognizer", "tune_weights", "yes"),
        ("localize", "threshold_sigma", None),
        ("synth", "noise_sigma", "4"),
    ],
)
def test_validate_rejects_wrong_types(section, key, value):
    config = Config()
    setattr(config[section], key, value)
    with pytest.raises(ConfigError, match=f"{section}.{key} must be"):
        config.validate()


def test_validate_accepts_ints_for_floats():
    config = Config(synth={"noise_sigma": 4}, recognizer={"weights": [1] * 8})
    assert config.validate() is config


def test_wrong_type_in_file(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("recognizer:\n  k: three\n")
    os.environ["VISUAL_WORDS_CONFIG"] = str(path)
    with pytest.raises(ConfigError, match="recognizer.k must be int"):
        load_config()

    path.write_text("recognizer: 5\n")
    with pytest.raises(ConfigError, match=r"\[recognizer\] must be a mapping"):
        load_config()


def test_helpers():
    config = Config(recognizer={"k": 7})
    assert config.recognizer.k == 7
    assert config["recognizer"] is config.recognizer
    assert config.get("missing", "fallback") == "fallback"
    config.update(evaluation={"vsp_activity": 0.2})
    assert config.evaluation == {"vsp_activity": 0.2}
    assert Config().to_dict()["synth"]["seed"] == 7
