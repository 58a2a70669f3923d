"""Logging setup driven by the SKEWBENCH_LOG environment variable"""

import logging
import os
from typing import Optional

from dotenv import load_dotenv

LOG_ENV_VAR = 'SKEWBENCH_LOG'
DEFAULT_LEVEL = 'WARNING'
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def configure_logging(level: Optional[str] = None) -> int:
    """
    Configure the root logger once for command-line use.

    Args:
        level: Explicit level name. If not provided, reads SKEWBENCH_LOG
               (a ``.env`` file in the working directory is honored).

    Returns:
        The numeric level that was applied
    """
    load_dotenv()
    name = (level or os.getenv(LOG_ENV_VAR) or DEFAULT_LEVEL).upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        logging.getLogger(__name__).warning("Unknown %s=%r, using %s", LOG_ENV_VAR, name, DEFAULT_LEVEL)
        numeric = logging.getLevelName(DEFAULT_LEVEL)
    logging.basicConfig(level=numeric, format=LOG_FORMAT)
    logging.getLogger('skewbench').setLevel(numeric)
    return numeric
