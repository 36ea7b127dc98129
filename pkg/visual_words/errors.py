class VisualWordsError(Exception):
    """Base error. `exit_code` is what the CLI exits with."""

    exit_code: int = 1


class DimensionError(VisualWordsError, ValueError):
    """An image or sequence has the wrong shape for the operation."""

    exit_code = 2


class ConfigError(VisualWordsError, ValueError):
    """A configuration value is out of range or malformed."""

    exit_code = 2


class ManifestError(VisualWordsError):
    """The dataset manifest does not fit the requested protocol."""

    exit_code = 2


class FrameIOError(VisualWordsError, OSError):
    """A frame, signature, model or report file could not be read or written."""

    exit_code = 3


class ModelError(VisualWordsError):
    """The training index cannot be used as asked."""

    exit_code = 4
