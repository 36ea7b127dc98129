import os
from dataclasses import asdict, dataclass, field, fields

import yaml

from .errors import ConfigError

DISTANCE_MODES = ("dtw", "interp")


@dataclass
class LocalizeConfig:
    """
    Configuration settings for lip localization.

    Attributes:
        seed_fraction (float): Fraction of top-scoring (cr - cb) pixels marked as seeds.
        threshold_sigma (float): Multiplier of the seed distance spread in the acceptance radius.
        threshold_floor (float): Lower bound of the acceptance radius.
        low_confidence_fraction (float): Lip masks covering more of the search
            area than this are reported as low confidence.
    """

    seed_fraction: float = 0.10
    threshold_sigma: float = 1.5
    threshold_floor: float = 0.01
    low_confidence_fraction: float = 0.5


@dataclass
class FeatureConfig:
    """
    Configuration settings for feature extraction.

    Attributes:
        resize (int): Side of the square both ROIs are scaled to before the DWT.
        mi_bins (int): Number of quantization bins per image for mutual information.
        edge_epsilon (float): Smoothing term of the edge ratio.
    """

    resize: int = 50
    mi_bins: int = 64
    edge_epsilon: float = 1e-6


@dataclass
class RecognizerConfig:
    """
    Configuration settings for the KNN recognizer.

    Attributes:
        k (int): Number of neighbours that vote.
        distance (str): Per-signal distance, "dtw" or "interp".
        interp_len (int): Length signals are resampled to in "interp" mode.
        weights (list): Fusion weights for H, W, M, Q, R, ER, RC, T.
        tune_weights (bool): Grid-search the weights on the training set.
    """

    k: int = 5
    distance: str = "dtw"
    interp_len: int = 32
    weights: list[float] = field(default_factory=lambda: [1.0] * 8)
    tune_weights: bool = False


@dataclass
class SynthConfig:
    """
    Configuration settings for the synthetic mouth-sequence generator.

    Attributes:
        vocabulary_size (int): Number of word classes.
        speakers (int): Number of subjects.
        repetitions (int): Utterances of each word per subject and session.
        sessions (int): Recording sessions per subject (1 or 2).
        frames_min (int): Shortest word in frames.
        frames_max (int): Longest word in frames.
        noise_sigma (float): Standard deviation of the additive pixel noise.
        seed (int): Seed of every random draw.
        width (int): Frame width in pixels.
        height (int): Frame height in pixels.
        speaker_variation (float): Strength of per-speaker colour, amplitude
            and trajectory perturbation.
        vsp_speakers (int): Number of trailing subjects rendered as
            visual-speechless (near-zero mouth movement).
        vsp_amplitude (float): Movement amplitude of those subjects.
    """

    vocabulary_size: int = 10
    speakers: int = 3
    repetitions: int = 5
    sessions: int = 2
    frames_min: int = 12
    frames_max: int = 30
    noise_sigma: float = 4.0
    seed: int = 7
    width: int = 320
    height: int = 240
    speaker_variation: float = 0.15
    vsp_speakers: int = 0
    vsp_amplitude: float = 0.08


@dataclass
class EvaluationConfig:
    """
    Configuration settings for evaluation reports.

    Attributes:
        vsp_activity (float): Subjects whose visual activity falls below this
            are flagged as visual-speechless.
    """

    vsp_activity: float = 0.15


def _type_ok(expected, value) -> bool:
    number = isinstance(value, (int, float)) and not isinstance(value, bool)
    if expected is float:
        return number
    if expected is int:
        return number and isinstance(value, int)
    if expected is bool or expected is str:
        return isinstance(value, expected)
    # list[float]
    return isinstance(value, list) and all(_type_ok(float, v) for v in value)


def check_types(config: "Config") -> None:
    """Raise `ConfigError` for the first section or value of the wrong type."""

    for section in fields(config):
        value = getattr(config, section.name)
        section_type = type(section.default_factory())  # type: ignore[misc]
        if not isinstance(value, section_type):
            raise ConfigError(f"[{section.name}] must be a mapping, got {value!r}")
        for item in fields(value):
            setting = getattr(value, item.name)
            if not _type_ok(item.type, setting):
                expected = getattr(item.type, "__name__", str(item.type))
                raise ConfigError(
                    f"{section.name}.{item.name} must be {expected}, got {setting!r}"
                )


@dataclass
class Config:
    """
    Configuration settings for the visual words toolkit.

    Attributes:
        localize (LocalizeConfig): The lip localization configuration.
        features (FeatureConfig): The feature extraction configuration.
        recognizer (RecognizerConfig): The recognizer configuration.
        synth (SynthConfig): The synthetic data configuration.
        evaluation (EvaluationConfig): The evaluation configuration.
    """

    localize: LocalizeConfig = field(default_factory=LocalizeConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    recognizer: RecognizerConfig = field(default_factory=RecognizerConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)

    def __getitem__(self, key):
        return getattr(self, key)

    def __post_init__(self):
        for section in fields(self):
            value = getattr(self, section.name)
            if isinstance(value, dict):
                section_type = type(section.default_factory())  # type: ignore[misc]
                try:
                    setattr(self, section.name, section_type(**value))
                except TypeError as e:
                    raise ConfigError(f"Invalid [{section.name}] section: {e}") from e

    def get(self, key, default=None):
        return getattr(self, key, default)

    def update(self, **kwargs):
        for key, value in kwargs.items():
            setattr(self, key, value)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> "Config":
        """Check every value against its type and allowed range.

        Raises:
            ConfigError: The first value of the wrong type or out of range.

        Returns:
            Config: self, for chaining
        """

        check_types(self)
        rec = self.recognizer
        if rec.k < 1:
            raise ConfigError(f"k must be >= 1, got {rec.k}")
        if rec.distance not in DISTANCE_MODES:
            raise ConfigError(
                f"distance must be one of {', '.join(DISTANCE_MODES)}, got {rec.distance!r}"
            )
        if rec.interp_len < 2:
            raise ConfigError(f"interp_len must be >= 2, got {rec.interp_len}")
        if len(rec.weights) != 8:
            raise ConfigError(f"Expected 8 weights, got {len(rec.weights)}")
        if any(w < 0 for w in rec.weights) or sum(rec.weights) <= 0:
            raise ConfigError("Weights must be non-negative with a positive sum")

        loc = self.localize
        if not 0 < loc.seed_fraction < 1:
            raise ConfigError(f"seed_fraction must be in (0, 1), got {loc.seed_fraction}")
        if loc.threshold_floor <= 0:
            raise ConfigError("threshold_floor must be positive")

        if self.features.resize < 2 or self.features.mi_bins < 2:
            raise ConfigError("resize and mi_bins must be >= 2")

        synth = self.synth
        for name in ("vocabulary_size", "speakers", "repetitions", "sessions"):
            if getattr(synth, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(synth, name)}")
        if synth.sessions > 2:
            raise ConfigError(f"sessions must be 1 or 2, got {synth.sessions}")
        if not 2 <= synth.frames_min <= synth.frames_max:
            raise ConfigError(
                f"Need 2 <= frames_min <= frames_max, got {synth.frames_min}..{synth.frames_max}"
            )
        if synth.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {synth.noise_sigma}")
        if synth.width < 16 or synth.height < 16:
            raise ConfigError("Frames must be at least 16x16 pixels")
        if not 0 <= synth.vsp_speakers <= synth.speakers:
            raise ConfigError("vsp_speakers must be between 0 and speakers")
        return self


def load_config() -> Config:
    """Load the configuration from the config file.

    Returns:
        Config: The configuration object
    """

    filename = os.getenv(
        "VISUAL_WORDS_CONFIG", f'{os.path.expanduser("~")}/.visual_words.yaml'
    )
    # load config file
    if os.path.exists(filename):
        with open(filename, "r") as f:
            try:
                config = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"Error loading config file {filename}: {e}") from e
        if not isinstance(config, dict):
            raise ConfigError(f"Config file {filename} must hold a mapping")
        try:
            return Config(**config).validate()
        except TypeError as e:
            raise ConfigError(f"Error loading config file {filename}: {e}") from e
    return Config()
