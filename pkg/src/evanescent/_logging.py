from __future__ import annotations

import logging

from rich.console import Console
from rich.logging import RichHandler

__all__ = ["configure_logging", "logger"]

logger = logging.getLogger("evanescent")


def configure_logging(stderr_level: int | str = logging.WARNING) -> None:
    """Send `evanescent` log records to stderr through a rich handler.

    Calling this more than once replaces the previously installed handler.
    """
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(console=Console(stderr=True), show_path=False)
    handler.setLevel(stderr_level)
    logger.addHandler(handler)
    logger.setLevel(stderr_level)
