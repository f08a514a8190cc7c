"""Logging configuration for the command-line tool."""

import logging
from typing import Union

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: Union[int, str] = logging.INFO) -> logging.Logger:
    """
    Install one stream handler on the ``mvkit`` logger.

    Calling it again replaces the handler instead of stacking a second one.

    Args:
        level: Level number or name (``"DEBUG"``, ``"INFO"``, ...)

    Returns:
        logging.Logger: The package logger
    """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO
    root = logging.getLogger("mvkit")
    for handler in list(root.handlers):
        if getattr(handler, "_mvkit_handler", False):
            root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._mvkit_handler = True
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False
    return root
