import os

import pytest

from visual_words.config import SynthConfig


@pytest.fixture(autouse=True, scope="session")
def log_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("logs") / "visual_words.log"
    os.environ["VISUAL_WORDS_LOG"] = str(path)
    return path


@pytest.fixture(autouse=True)
def no_user_config(monkeypatch, tmp_path):
    monkeypatch.setenv("VISUAL_WORDS_CONFIG", str(tmp_path / "absent.yaml"))


@pytest.fixture
def small_synth() -> SynthConfig:
    """A dataset small enough to render and evaluate in a few seconds."""

    return SynthConfig(
        vocabulary_size=3,
        speakers=2,
        repetitions=3,
        sessions=2,
        frames_min=6,
        frames_max=9,
        noise_sigma=2.0,
        seed=7,
        width=96,
        height=72,
    )
