import logging
import os
import sys
from pathlib import Path
from typing import Optional

DEFAULT_LOG_FILE = "logs/scss_sim.log"


def setup_logger(name: str = "scss_sim", log_file: Optional[str] = DEFAULT_LOG_FILE, level=logging.INFO):
    """
    Configures a logger that outputs to both console and file.

    Args:
        name: Name of the logger
        log_file: Path to the log file, None or "" for console only
        level: Console logging level (default: INFO)

    Returns:
        logging.Logger: Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG)  # Catch everything, handlers filter it

    # Prevent duplicate handlers if function is called multiple times
    if logger.handlers:
        return logger

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        # File Handler - Detailed
        file_handler = logging.FileHandler(log_path, mode='a', encoding='utf-8')
        file_handler.setLevel(logging.DEBUG)
        file_format = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s'
        )
        file_handler.setFormatter(file_format)
        logger.addHandler(file_handler)

    # Console Handler - Clean
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter('%(message)s'))
    logger.addHandler(console_handler)

    return logger


def set_console_level(level) -> None:
    """Adjust the console handler threshold (CLI --verbose / --quiet)."""
    for handler in logger.handlers:
        if not isinstance(handler, logging.FileHandler):
            handler.setLevel(level)


# Create a default instance; SCSS_SIM_LOG_FILE="" disables the file handler
logger = setup_logger(log_file=os.getenv("SCSS_SIM_LOG_FILE", DEFAULT_LOG_FILE))
