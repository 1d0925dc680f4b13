#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Logging configuration for the TWOPHOTON project.

Console output goes to stderr so that JSON documents written to stdout by
the command-line interface stay machine-readable.
"""

import os
import logging
from datetime import datetime
from typing import Optional, Union

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def parse_level(level: Union[int, str]) -> int:
    """Accept a logging level as an int or a name such as 'debug'."""
    if isinstance(level, int):
        return level
    value = logging.getLevelName(str(level).upper())
    if not isinstance(value, int):
        raise ValueError(f"Unknown logging level: {level}")
    return value


def default_log_file(log_dir: str = './logs', prefix: str = 'twophoton') -> str:
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    return os.path.join(log_dir, f"{prefix}_{timestamp}.log")


def setup_logging(level: Union[int, str] = logging.INFO, log_file: Optional[str] = None,
                  file_logging: bool = True) -> Optional[str]:
    """Set up logging for a run.

    Args:
        level: Logging level (default: INFO)
        log_file: Path to log file (default: ./logs/twophoton_<timestamp>.log)
        file_logging: Whether to write a log file at all

    Returns:
        Absolute path of the log file, or None when logging to the console only
    """
    level = parse_level(level)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root_logger.addHandler(console_handler)

    if not file_logging:
        root_logger.debug(f"Logging initialized at level {logging.getLevelName(level)} (console only)")
        return None

    log_file = log_file or default_log_file()
    log_dir = os.path.dirname(log_file)
    if log_dir and not os.path.exists(log_dir):
        os.makedirs(log_dir)

    file_handler = logging.FileHandler(log_file)
    file_handler.setLevel(level)
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root_logger.addHandler(file_handler)

    root_logger.info(f"Logging initialized at level {logging.getLevelName(level)}")
    root_logger.info(f"Log file: {os.path.abspath(log_file)}")
    return os.path.abspath(log_file)
