import logging
import os
import sys

from colorama import Fore, Style

COLORS = {
    logging.DEBUG: Fore.LIGHTBLACK_EX,
    logging.INFO: Fore.BLUE,
    logging.WARNING: Fore.YELLOW,
    logging.ERROR: Fore.RED,
    logging.CRITICAL: Fore.RED,
}


class StreamFormatter(logging.Formatter):
    """Logging Formatter to add colors"""

    def format(self, record: logging.LogRecord) -> str:
        return f"{COLORS[record.levelno]}{record.getMessage()}{Style.RESET_ALL}"


class StderrHandler(logging.StreamHandler):
    """Stream handler that always writes to the current sys.stderr"""

    @property  # type: ignore[override]
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass


class FileFormatter(logging.Formatter):
    """Plain timestamped format for the log file"""

    BASE_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

    def __init__(self) -> None:
        super().__init__(self.BASE_FORMAT)


class LoggerManager:
    """
    LoggerManager is a singleton class that provides the configured
    `visual_words` logger.
    The stream handler writes coloured messages to stderr so that command
    output on stdout stays machine-readable.
    The file handler records everything down to DEBUG, including the fold
    construction of every evaluation run.
    """

    logger: logging.Logger | None = None
    stream_handler: logging.Handler | None = None

    @classmethod
    def get_logger(cls, level: int | None = None) -> logging.Logger:
        """Get the logger instance

        Args:
            level (int, optional): The stream logging level. Defaults to
                logging.INFO on first call and leaves it unchanged afterwards.

        Returns:
            logging.Logger: The logger instance
        """

        if cls.logger is None:
            cls.logger = logging.getLogger("visual_words")
            cls.logger.setLevel(logging.DEBUG)
            cls.logger.propagate = False

            # Stream handler
            cls.stream_handler = StderrHandler()
            cls.stream_handler.setLevel(level or logging.INFO)
            cls.stream_handler.setFormatter(StreamFormatter())
            cls.logger.addHandler(cls.stream_handler)

            # File handler
            log_filename = os.getenv(
                "VISUAL_WORDS_LOG", f"{os.path.expanduser('~')}/.visual_words.log"
            )
            try:
                file_handler = logging.FileHandler(log_filename)
            except OSError:
                cls.logger.warning(f"Cannot open log file {log_filename}")
            else:
                file_handler.setLevel(logging.DEBUG)
                file_handler.setFormatter(FileFormatter())
                cls.logger.addHandler(file_handler)
        elif level is not None and cls.stream_handler is not None:
            cls.stream_handler.setLevel(level)

        return cls.logger
